#include "rotalign/observables.hpp"

#include "rotalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rotalign {

void DetectionModel::validate() const
{
    if (!(blur_rad >= 0.0) || !std::isfinite(blur_rad)) throw ConfigError("detection: blur must be nonnegative");
    if (!(selectivity_exponent >= 0.0) || !std::isfinite(selectivity_exponent))
        throw ConfigError("detection: selectivity exponent must be nonnegative");
}

std::string DetectionModel::describe() const
{
    std::ostringstream os;
    os << (recoil == RecoilModel::Axial ? "axial" : "axial-with-blur");
    if (recoil == RecoilModel::AxialWithBlur) os << "(sigma_rad=" << blur_rad << ")";
    os << ", selectivity_n=" << selectivity_exponent << ", probe_axis=" << (probe_axis == ProbeAxis::Y ? "Y" : "X");
    return os.str();
}

namespace {

Eigen::MatrixXd theta_table(const BasisSpec& basis, const std::vector<double>& xs)
{
    const auto js = basis.j_values();
    Eigen::MatrixXd t(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(js.size()));
    const int am = std::abs(basis.m);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const auto y = spherical_theta_part(basis.j_max, basis.m, xs[k]);
        for (std::size_t i = 0; i < js.size(); ++i)
            t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = y[js[i] - am];
    }
    return t;
}

Eigen::MatrixXd legendre_table(int l_max, const std::vector<double>& xs)
{
    Eigen::MatrixXd t(static_cast<Eigen::Index>(xs.size()), l_max + 1);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const auto p = legendre_series(l_max, xs[k]);
        for (int l = 0; l <= l_max; ++l) t(static_cast<Eigen::Index>(k), l) = p[l];
    }
    return t;
}

double phi_average(double n, double x, bool numerator)
{
    // (1/2pi) int |sin(theta) cos(phi)|^(2n) [cos^2 theta_2D] dphi for a probe along X
    const double s2 = std::max(0.0, 1.0 - x * x);
    auto integrand = [&](double phi) {
        const double cphi = std::cos(phi);
        double w = n == 0.0 ? 1.0 : std::pow(std::abs(cphi) * std::sqrt(s2), 2.0 * n);
        if (!numerator) return w;
        const double den = x * x + s2 * cphi * cphi;
        return den > 0.0 ? w * x * x / den : w;
    };
    double prev = 0.0;
    for (int npts = 256; npts <= (1 << 20); npts *= 2) {
        // the integrand is pi-periodic and even about 0; sample a half period
        double sum = 0.0;
        const double h = constants::pi / npts;
        for (int i = 0; i < npts; ++i) sum += integrand((i + 0.5) * h);
        const double val = sum / npts;
        if (npts > 256 && std::abs(val - prev) <= 1e-11 * std::max(1.0, std::abs(val))) return val;
        prev = val;
    }
    throw NumericalError("detection: azimuthal quadrature did not converge");
}

} // namespace

AlignmentEvaluator::AlignmentEvaluator(const BasisSpec& basis, const DetectionModel& det)
    : basis_(basis), det_(det), cos2_(CosSqOperator::build(basis))
{
    det_.validate();
    const double n = det_.selectivity_exponent;
    closed_form_ = det_.effective_blur() == 0.0 && n == 0.0;

    // <J'|abs(cos)|J> is exact on each half interval with enough Gauss nodes
    const int n_exact = basis.j_max + 2;
    const int n_half = std::max(n_exact, n == std::floor(n) ? basis.j_max + static_cast<int>(n) + 2 : 4 * basis.j_max + 128);
    half_ = gauss_legendre(n_half, 0.0, 1.0);
    y_half_ = theta_table(basis, half_.nodes);
    {
        const auto& x = half_.nodes;
        const auto& w = half_.weights;
        Eigen::VectorXd wx(static_cast<Eigen::Index>(x.size()));
        for (std::size_t k = 0; k < x.size(); ++k) wx[static_cast<Eigen::Index>(k)] = w[k] * x[k];
        // Y_J(-x) = (-1)^(J+m) Y_J(x): the two halves contribute equally for same-parity pairs
        Eigen::MatrixXd pos = y_half_.transpose() * wx.asDiagonal() * y_half_;
        const auto js = basis.j_values();
        abs_cos_.resize(pos.rows(), pos.cols());
        for (Eigen::Index i = 0; i < pos.rows(); ++i)
            for (Eigen::Index k = 0; k < pos.cols(); ++k) {
                const int sgn = ((js[i] + js[k]) % 2 == 0) ? 1 : -1;
                abs_cos_(i, k) = 2.0 * constants::pi * pos(i, k) * (1.0 + sgn);
            }
    }
    if (closed_form_) return;

    l_max_ = 2 * basis.j_max;
    full_ = gauss_legendre(2 * basis.j_max + 2);
    y_full_ = theta_table(basis, full_.nodes);
    legendre_full_ = legendre_table(l_max_, full_.nodes);
    legendre_half_ = legendre_table(l_max_, half_.nodes);
    blur_factor_.resize(l_max_ + 1);
    const double sigma = det_.effective_blur();
    for (int l = 0; l <= l_max_; ++l) blur_factor_[l] = std::exp(-0.5 * l * (l + 1.0) * sigma * sigma);

    const auto nh = half_.nodes.size();
    numerator_pos_.resize(nh);
    denominator_pos_.resize(nh);
    for (std::size_t k = 0; k < nh; ++k) {
        const double x = half_.nodes[k];
        if (det_.probe_axis == ProbeAxis::Y) {
            const double w = n == 0.0 ? 1.0 : std::pow(x, 2.0 * n);
            numerator_pos_[k] = w * x;         // phi-average of cos^2 theta_2D is abs(cos theta)
            denominator_pos_[k] = w;
        } else {
            numerator_pos_[k] = phi_average(n, x, true);
            denominator_pos_[k] = phi_average(n, x, false);
        }
    }
    // both weights are even in x
    numerator_neg_ = numerator_pos_;
    denominator_neg_ = denominator_pos_;
}

void AlignmentEvaluator::require_basis(const WavePacket& packet) const
{
    if (!(packet.basis == basis_) || packet.amplitudes.size() != basis_.size())
        throw std::invalid_argument("AlignmentEvaluator: packet basis does not match");
}

double AlignmentEvaluator::cos2_3d(const WavePacket& packet) const
{
    require_basis(packet);
    return cos2_.expectation(packet.amplitudes);
}

double AlignmentEvaluator::cos2_2d(const WavePacket& packet) const
{
    require_basis(packet);
    if (std::abs(packet.norm() - 1.0) > 1e-6)
        throw std::domain_error("expectation_cos2_2d: packet is not normalized");
    if (closed_form_) return std::real(packet.amplitudes.dot(abs_cos_ * packet.amplitudes));
    return general_cos2_2d(packet.amplitudes);
}

double AlignmentEvaluator::general_cos2_2d(const Eigen::VectorXcd& c) const
{
    const auto js = basis_.j_values();
    const auto nh = static_cast<Eigen::Index>(half_.nodes.size());
    Eigen::VectorXd rho_pos(nh), rho_neg(nh);
    const double two_pi = 2.0 * constants::pi;

    if (det_.effective_blur() == 0.0) {
        // density directly at +-x; Y_J(-x) = (-1)^(J+m) Y_J(x)
        Eigen::VectorXcd c_neg = c;
        for (std::size_t i = 0; i < js.size(); ++i)
            if ((js[i] + basis_.m) % 2 != 0) c_neg[static_cast<Eigen::Index>(i)] = -c_neg[static_cast<Eigen::Index>(i)];
        const Eigen::VectorXcd a_pos = y_half_ * c;
        const Eigen::VectorXcd a_neg = y_half_ * c_neg;
        rho_pos = two_pi * a_pos.cwiseAbs2();
        rho_neg = two_pi * a_neg.cwiseAbs2();
    } else {
        // Legendre expansion of the density, damped by the spherical heat kernel
        const Eigen::VectorXcd amp = y_full_ * c;
        const Eigen::VectorXd rho = two_pi * amp.cwiseAbs2();
        Eigen::VectorXd coeff(l_max_ + 1);
        for (int l = 0; l <= l_max_; ++l) {
            double s = 0.0;
            for (std::size_t k = 0; k < full_.nodes.size(); ++k)
                s += full_.weights[k] * rho[static_cast<Eigen::Index>(k)] * legendre_full_(static_cast<Eigen::Index>(k), l);
            coeff[l] = 0.5 * (2.0 * l + 1.0) * s * blur_factor_[l];
        }
        Eigen::VectorXd coeff_neg = coeff;
        for (int l = 1; l <= l_max_; l += 2) coeff_neg[l] = -coeff_neg[l];
        rho_pos = legendre_half_ * coeff;
        rho_neg = legendre_half_ * coeff_neg;
    }
    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k < nh; ++k) {
        const double w = half_.weights[static_cast<std::size_t>(k)];
        num += w * (rho_pos[k] * numerator_pos_[k] + rho_neg[k] * numerator_neg_[k]);
        den += w * (rho_pos[k] * denominator_pos_[k] + rho_neg[k] * denominator_neg_[k]);
    }
    if (!(den > 0.0)) throw NumericalError("expectation_cos2_2d: zero detection probability");
    return num / den;
}

double expectation_cos2_3d(const WavePacket& packet)
{
    return CosSqOperator::build(packet.basis).expectation(packet.amplitudes);
}

double expectation_cos2_2d(const WavePacket& packet, const DetectionModel& det)
{
    return AlignmentEvaluator(packet.basis, det).cos2_2d(packet);
}

std::vector<double> pendular_weights(const WavePacket& packet, const PendularSpectrum& spectrum, int k)
{
    if (!(packet.basis == spectrum.basis) || packet.amplitudes.size() != spectrum.eigenvectors.rows())
        throw std::invalid_argument("pendular_weights: packet and spectrum bases differ (dimension mismatch)");
    const int n = std::min(k, spectrum.size());
    std::vector<double> w(static_cast<std::size_t>(std::max(0, n)));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = std::norm(spectrum.eigenvectors.col(i).cast<std::complex<double>>().dot(packet.amplitudes));
    return w;
}

std::vector<double> angular_density(const WavePacket& packet, const std::vector<double>& theta_grid)
{
    const auto js = packet.basis.j_values();
    const int am = std::abs(packet.basis.m);
    std::vector<double> rho(theta_grid.size());
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
        const double th = theta_grid[k];
        const auto y = spherical_theta_part(packet.basis.j_max, packet.basis.m, std::cos(th));
        std::complex<double> a{};
        for (std::size_t i = 0; i < js.size(); ++i) a += packet.amplitudes[static_cast<Eigen::Index>(i)] * y[js[i] - am];
        rho[k] = 2.0 * constants::pi * std::norm(a) * std::sin(th);
    }
    return rho;
}

AlignmentTrace build_trace(const TrajectoryRecord& record, const DetectionModel& det, int n_tracked)
{
    AlignmentTrace tr;
    const auto n = record.size();
    tr.times_ps = record.times_ps;
    tr.delta_omega = record.delta_omega;
    tr.cos2_3d.resize(n);
    tr.cos2_2d.resize(n);
    if (n == 0) return tr;
    const auto& basis = record.packets.front().basis;
    const auto js = basis.j_values();
    // labels of the lowest field-free levels (J(J+1) grows with J)
    for (int i = 0; i < std::min<int>(n_tracked, static_cast<int>(js.size())); ++i) tr.tracked_labels.push_back(js[i]);
    tr.pendular_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tr.tracked_labels.size()));

    const AlignmentEvaluator eval(basis, det);
    std::map<double, PendularSpectrum> cache;
    for (std::size_t s = 0; s < n; ++s) {
        const auto& p = record.packets[s];
        tr.cos2_3d[s] = eval.cos2_3d(p);
        tr.cos2_2d[s] = eval.cos2_2d(p);
        if (tr.tracked_labels.empty()) continue;
        const double dw = record.delta_omega[s];
        auto it = cache.find(dw);
        if (it == cache.end()) {
            if (cache.size() > 64) cache.clear();
            it = cache.emplace(dw, eigensolve_pendular(basis, dw)).first;
        }
        const auto& spec = it->second;
        for (std::size_t c = 0; c < tr.tracked_labels.size(); ++c) {
            const int idx = spec.index_of_label(tr.tracked_labels[c]);
            if (idx < 0) continue;
            tr.pendular_weights(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c))
                = std::norm(spec.eigenvectors.col(idx).cast<std::complex<double>>().dot(p.amplitudes));
        }
    }
    return tr;
}

} // namespace rotalign
