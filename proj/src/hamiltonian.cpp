#include "rotalign/hamiltonian.hpp"

#include "rotalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rotalign {

double cos2_matrix_element(int j, int j_prime, int m)
{
    if (j < 0 || j_prime < 0 || std::abs(m) > j || std::abs(m) > j_prime)
        throw std::domain_error("cos2_matrix_element: requires |m| <= min(j, j')");
    const double mm = static_cast<double>(m) * m;
    if (j == j_prime) {
        const double jj = j;
        return 1.0 / 3.0 + (2.0 / 3.0) * (jj * (jj + 1.0) - 3.0 * mm) / ((2.0 * jj - 1.0) * (2.0 * jj + 3.0));
    }
    if (std::abs(j - j_prime) != 2) return 0.0;
    const double jl = std::min(j, j_prime);
    return std::sqrt(((jl + 1.0) * (jl + 1.0) - mm) * ((jl + 2.0) * (jl + 2.0) - mm)
                     / ((2.0 * jl + 1.0) * (2.0 * jl + 5.0)))
         / (2.0 * jl + 3.0);
}

CosSqOperator CosSqOperator::build(const BasisSpec& basis)
{
    basis.validate();
    CosSqOperator op;
    op.basis = basis;
    const auto js = basis.j_values();
    const int n = static_cast<int>(js.size());
    op.diag.resize(n);
    op.offdiag2.assign(n, 0.0);
    op.partner.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        op.diag[i] = cos2_matrix_element(js[i], js[i], basis.m);
        for (int k = i + 1; k < n; ++k) {
            if (js[k] == js[i] + 2) {
                op.partner[i] = k;
                op.offdiag2[i] = cos2_matrix_element(js[i], js[k], basis.m);
                break;
            }
        }
    }
    return op;
}

Eigen::VectorXcd CosSqOperator::apply(const Eigen::VectorXcd& psi) const
{
    const int n = static_cast<int>(diag.size());
    Eigen::VectorXcd out(n);
    for (int i = 0; i < n; ++i) out[i] = diag[i] * psi[i];
    for (int i = 0; i < n; ++i) {
        const int k = partner[i];
        if (k < 0) continue;
        out[i] += offdiag2[i] * psi[k];
        out[k] += offdiag2[i] * psi[i];
    }
    return out;
}

double CosSqOperator::expectation(const Eigen::VectorXcd& psi) const
{
    return std::real(psi.dot(apply(psi)));
}

Eigen::MatrixXd CosSqOperator::dense() const
{
    const int n = static_cast<int>(diag.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = diag[i];
        if (partner[i] >= 0) {
            a(i, partner[i]) = offdiag2[i];
            a(partner[i], i) = offdiag2[i];
        }
    }
    return a;
}

SymmetricBandMatrix::SymmetricBandMatrix(int n, int bandwidth)
    : n_(n), bandwidth_(bandwidth), band_(Eigen::MatrixXd::Zero(bandwidth + 1, n))
{
}

double SymmetricBandMatrix::operator()(int i, int j) const
{
    const int lo = std::min(i, j), d = std::abs(i - j);
    if (d > bandwidth_) return 0.0;
    return band_(d, lo);
}

void SymmetricBandMatrix::set(int i, int j, double value)
{
    const int lo = std::min(i, j), d = std::abs(i - j);
    if (d > bandwidth_) throw std::out_of_range("SymmetricBandMatrix: element outside band");
    band_(d, lo) = value;
}

Eigen::MatrixXd SymmetricBandMatrix::dense() const
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = std::max(0, i - bandwidth_); j <= std::min(n_ - 1, i + bandwidth_); ++j)
            a(i, j) = (*this)(i, j);
    return a;
}

SymmetricBandMatrix build_hamiltonian(const BasisSpec& basis, double delta_omega)
{
    if (!(delta_omega >= 0.0))
        throw std::domain_error("build_hamiltonian: delta_omega must be nonnegative");
    const auto op = CosSqOperator::build(basis);
    const auto js = basis.j_values();
    const int n = static_cast<int>(js.size());
    SymmetricBandMatrix h(n, basis.parity == Parity::Both ? 2 : 1);
    for (int i = 0; i < n; ++i) {
        h.set(i, i, js[i] * (js[i] + 1.0) - delta_omega * op.diag[i]);
        if (op.partner[i] >= 0) h.set(i, op.partner[i], -delta_omega * op.offdiag2[i]);
    }
    return h;
}

std::vector<TridiagonalBlock> hamiltonian_blocks(const CosSqOperator& cos2, double delta_omega)
{
    const auto js = cos2.basis.j_values();
    const int n = static_cast<int>(js.size());
    std::vector<bool> seen(n, false);
    std::vector<TridiagonalBlock> blocks;
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        TridiagonalBlock b;
        for (int i = start; i >= 0; i = cos2.partner[i]) {
            seen[i] = true;
            b.indices.push_back(i);
        }
        const int len = static_cast<int>(b.indices.size());
        b.diag.resize(len);
        b.subdiag.resize(std::max(0, len - 1));
        for (int k = 0; k < len; ++k) {
            const int i = b.indices[k];
            b.diag[k] = js[i] * (js[i] + 1.0) - delta_omega * cos2.diag[i];
            if (k + 1 < len) b.subdiag[k] = -delta_omega * cos2.offdiag2[i];
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

int PendularSpectrum::index_of_label(int label) const
{
    for (int i = 0; i < size(); ++i)
        if (labels[i] == label) return i;
    return -1;
}

bool PendularSpectrum::all_converged(int n_lowest) const
{
    for (int i = 0; i < std::min(n_lowest, size()); ++i)
        if (!converged[i]) return false;
    return true;
}

namespace {

struct BlockState {
    double energy;
    int label;
    Eigen::VectorXd vec;
};

} // namespace

PendularSpectrum eigensolve_pendular(const BasisSpec& basis, double delta_omega)
{
    if (!(delta_omega >= 0.0))
        throw std::domain_error("eigensolve_pendular: delta_omega must be nonnegative");
    const auto cos2 = CosSqOperator::build(basis);
    const auto js = basis.j_values();
    const int n = static_cast<int>(js.size());

    std::vector<BlockState> states;
    states.reserve(n);
    for (const auto& block : hamiltonian_blocks(cos2, delta_omega)) {
        const int len = static_cast<int>(block.indices.size());
        Eigen::VectorXd values;
        Eigen::MatrixXd vectors;
        if (len == 1) {
            values = block.diag;
            vectors = Eigen::MatrixXd::Identity(1, 1);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(block.diag, block.subdiag, Eigen::ComputeEigenvectors);
            if (es.info() != Eigen::Success)
                throw NumericalError("eigensolve_pendular: tridiagonal eigensolver failed");
            values = es.eigenvalues();
            vectors = es.eigenvectors();
        }
        // Within a chain there are no crossings, so the k-th level correlates with the k-th J.
        for (int k = 0; k < len; ++k) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            for (int r = 0; r < len; ++r) v[block.indices[r]] = vectors(r, k);
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            if (v[imax] < 0.0) v = -v;
            states.push_back({values[k], js[block.indices[k]], std::move(v)});
        }
    }
    std::stable_sort(states.begin(), states.end(),
                     [](const BlockState& a, const BlockState& b) { return a.energy < b.energy; });

    PendularSpectrum s;
    s.basis = basis;
    s.delta_omega = delta_omega;
    s.energies.resize(n);
    s.eigenvectors.resize(n, n);
    s.labels.resize(n);
    s.bound.resize(n);
    s.converged.resize(n);
    s.cos2.resize(n);
    const Eigen::MatrixXd c = cos2.dense();
    for (int i = 0; i < n; ++i) {
        s.energies[i] = states[i].energy;
        s.eigenvectors.col(i) = states[i].vec;
        s.labels[i] = states[i].label;
        s.bound[i] = states[i].energy < 0.0;
        const auto& v = states[i].vec;
        double top = v[n - 1] * v[n - 1];
        if (n >= 2) top += v[n - 2] * v[n - 2];
        s.converged[i] = top < convergence_threshold;
        s.cos2[i] = v.dot(c * v);
    }
    return s;
}

PendularSpectrum eigensolve_converged(const BasisSpec& basis, double delta_omega, int n_required, int j_max_limit)
{
    BasisSpec b = basis;
    while (true) {
        auto s = eigensolve_pendular(b, delta_omega);
        if (s.all_converged(n_required)) return s;
        if (b.j_max * 2 > j_max_limit)
            throw NumericalError("eigensolve_converged: lowest " + std::to_string(n_required)
                                 + " states not converged at j_max = " + std::to_string(b.j_max)
                                 + " (limit " + std::to_string(j_max_limit) + ")");
        b = b.with_j_max(std::max(2, b.j_max * 2));
    }
}

std::vector<PendularSpectrum> adiabatic_track(const BasisSpec& basis, const std::vector<double>& path)
{
    std::vector<PendularSpectrum> out;
    out.reserve(path.size());
    for (std::size_t p = 0; p < path.size(); ++p) {
        auto s = eigensolve_pendular(basis, path[p]);
        if (p > 0) {
            const auto& prev = out.back();
            const int n = s.size();
            const Eigen::MatrixXd overlap = prev.eigenvectors.transpose() * s.eigenvectors;
            // greedy assignment by descending |overlap|
            std::vector<std::tuple<double, int, int>> pairs;
            pairs.reserve(static_cast<std::size_t>(n) * n);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    if (std::abs(overlap(i, k)) > 1e-3) pairs.emplace_back(std::abs(overlap(i, k)), i, k);
            std::stable_sort(pairs.begin(), pairs.end(),
                             [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
            std::vector<int> match(n, -1);
            std::vector<bool> used(n, false);
            for (const auto& [ov, i, k] : pairs) {
                if (match[k] >= 0 || used[i]) continue;
                match[k] = i;
                used[i] = true;
            }
            for (int k = 0; k < n; ++k) {
                const int i = match[k];
                if (i < 0 || std::abs(overlap(i, k)) < 0.5)
                    throw NumericalError("adiabatic_track: eigenvector overlap below 0.5 between delta_omega "
                                         + std::to_string(path[p - 1]) + " and " + std::to_string(path[p])
                                         + "; refine the path");
                s.labels[k] = prev.labels[i];
                if (overlap(i, k) < 0.0) s.eigenvectors.col(k) *= -1.0;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace rotalign
