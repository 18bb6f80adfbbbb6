#include "rotalign/propagator.hpp"

#include "rotalign/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rotalign {

using cdouble = std::complex<double>;
constexpr cdouble imag_unit{0.0, 1.0};

WavePacket WavePacket::basis_state(const BasisSpec& basis, int j, double tau)
{
    basis.validate();
    const int idx = basis.index_of(j);
    if (idx < 0) throw ConfigError("initial state J=" + std::to_string(j) + " is not part of the basis");
    WavePacket p;
    p.basis = basis;
    p.amplitudes = Eigen::VectorXcd::Zero(basis.size());
    p.amplitudes[idx] = 1.0;
    p.tau = tau;
    return p;
}

std::complex<double> WavePacket::amplitude(int j) const
{
    const int idx = basis.index_of(j);
    return idx < 0 ? cdouble{} : amplitudes[idx];
}

double WavePacket::boundary_population() const
{
    const auto n = amplitudes.size();
    double top = std::norm(amplitudes[n - 1]);
    if (n >= 2) top += std::norm(amplitudes[n - 2]);
    return top;
}

WavePacket WavePacket::extended_to(int j_max) const
{
    WavePacket p;
    p.basis = basis.with_j_max(j_max);
    p.tau = tau;
    p.amplitudes = Eigen::VectorXcd::Zero(p.basis.size());
    const auto js = basis.j_values();
    for (std::size_t i = 0; i < js.size(); ++i) {
        const int k = p.basis.index_of(js[i]);
        if (k >= 0) p.amplitudes[k] = amplitudes[static_cast<Eigen::Index>(i)];
    }
    return p;
}

std::string to_string(PropagationMethod m)
{
    switch (m) {
    case PropagationMethod::EigenbasisExponential: return "eigenbasis";
    case PropagationMethod::ImplicitMidpoint: return "implicit-midpoint";
    case PropagationMethod::AdaptiveExplicit: return "adaptive-explicit";
    }
    return "eigenbasis";
}

PropagationMethod parse_method(const std::string& text)
{
    if (text == "eigenbasis" || text == "split-operator-in-eigenbasis") return PropagationMethod::EigenbasisExponential;
    if (text == "implicit-midpoint") return PropagationMethod::ImplicitMidpoint;
    if (text == "adaptive-explicit") return PropagationMethod::AdaptiveExplicit;
    throw ConfigError("propagation: unknown method '" + text + "'");
}

void PropagationConfig::validate() const
{
    if (!(dt > 0.0)) throw ConfigError("propagation: dt must be positive");
    if (!(tolerance > 0.0) || tolerance > 1e-4) throw ConfigError("propagation: tolerance must lie in (0, 1e-4]");
    if (!(record_stride_ps > 0.0)) throw ConfigError("propagation: record stride must be positive");
    if (!(dw_step_fraction > 0.0) || dw_step_fraction > 1.0)
        throw ConfigError("propagation: dw_step_fraction must lie in (0, 1]");
    if (!(truncation_threshold > 0.0)) throw ConfigError("propagation: truncation threshold must be positive");
    if (!(handoff_threshold > 0.0) || handoff_threshold >= 1.0)
        throw ConfigError("propagation: handoff threshold must lie in (0, 1)");
    if (j_max_limit < 1) throw ConfigError("propagation: j_max_limit must be positive");
}

WavePacket evolve_field_free(const WavePacket& packet, double duration)
{
    WavePacket out = packet;
    const auto js = packet.basis.j_values();
    for (std::size_t i = 0; i < js.size(); ++i) {
        const double phase = -static_cast<double>(js[i]) * (js[i] + 1.0) * duration;
        out.amplitudes[static_cast<Eigen::Index>(i)] *= std::polar(1.0, phase);
    }
    out.tau = packet.tau + duration;
    return out;
}

namespace {

// psi <- exp(-i h [J^2 - dw cos^2]) psi, exactly through the block eigenbasis
void apply_exponential(Eigen::VectorXcd& psi, const CosSqOperator& cos2, double dw, double h)
{
    for (const auto& block : hamiltonian_blocks(cos2, dw)) {
        const auto len = static_cast<Eigen::Index>(block.indices.size());
        if (len == 1) {
            psi[block.indices[0]] *= std::polar(1.0, -block.diag[0] * h);
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(block.diag, block.subdiag, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) throw NumericalError("propagator: eigensolver failed");
        Eigen::VectorXcd sub(len);
        for (Eigen::Index k = 0; k < len; ++k) sub[k] = psi[block.indices[k]];
        Eigen::VectorXcd y = es.eigenvectors().transpose() * sub;
        for (Eigen::Index k = 0; k < len; ++k) y[k] *= std::polar(1.0, -es.eigenvalues()[k] * h);
        sub = es.eigenvectors() * y;
        for (Eigen::Index k = 0; k < len; ++k) psi[block.indices[k]] = sub[k];
    }
}

// (1 + i h/2 H) psi' = (1 - i h/2 H) psi per tridiagonal block
void apply_cayley(Eigen::VectorXcd& psi, const CosSqOperator& cos2, double dw, double h)
{
    for (const auto& block : hamiltonian_blocks(cos2, dw)) {
        const auto len = static_cast<Eigen::Index>(block.indices.size());
        const cdouble a = imag_unit * (0.5 * h);
        std::vector<cdouble> rhs(len), diag(len), off(len > 1 ? len - 1 : 0);
        for (Eigen::Index k = 0; k < len; ++k) {
            cdouble hpsi = block.diag[k] * psi[block.indices[k]];
            if (k > 0) hpsi += block.subdiag[k - 1] * psi[block.indices[k - 1]];
            if (k + 1 < len) hpsi += block.subdiag[k] * psi[block.indices[k + 1]];
            rhs[k] = psi[block.indices[k]] - a * hpsi;
            diag[k] = 1.0 + a * block.diag[k];
            if (k + 1 < len) off[k] = a * block.subdiag[k];
        }
        // Thomas algorithm for the symmetric complex tridiagonal system
        std::vector<cdouble> c(len), d(len);
        c[0] = len > 1 ? off[0] / diag[0] : 0.0;
        d[0] = rhs[0] / diag[0];
        for (Eigen::Index k = 1; k < len; ++k) {
            const cdouble denom = diag[k] - off[k - 1] * c[k - 1];
            c[k] = k + 1 < len ? off[k] / denom : 0.0;
            d[k] = (rhs[k] - off[k - 1] * d[k - 1]) / denom;
        }
        for (Eigen::Index k = len - 1; k >= 0; --k) {
            if (k + 1 < len) d[k] -= c[k] * d[k + 1];
            psi[block.indices[k]] = d[k];
        }
    }
}

Eigen::VectorXcd schrodinger_rhs(const Eigen::VectorXcd& psi, const CosSqOperator& cos2,
                                 const std::vector<double>& rot, double dw)
{
    Eigen::VectorXcd c = cos2.apply(psi);
    Eigen::VectorXcd out(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) out[i] = -imag_unit * (rot[i] * psi[i] - dw * c[i]);
    return out;
}

} // namespace

Propagator::Propagator(MoleculeSpec mol, PulseEnvelope pulse, PropagationConfig cfg)
    : mol_(std::move(mol)), pulse_(std::move(pulse)), cfg_(cfg)
{
    mol_.validate();
    pulse_.validate();
    cfg_.validate();
    units_ = ReducedUnits::for_molecule(mol_);
    peak_dw_ = reduced_coupling(mol_, pulse_.peak_intensity());
    support_ = pulse_.support(cfg_.handoff_threshold);
}

double Propagator::delta_omega_at(double t_ps) const { return peak_dw_ * pulse_.shape_at(t_ps); }

void Propagator::check_boundary(const WavePacket& packet, double t_ps, double* max_boundary) const
{
    const double top = packet.boundary_population();
    if (max_boundary) *max_boundary = std::max(*max_boundary, top);
    if (cfg_.abort_on_truncation && top > cfg_.truncation_threshold) {
        std::ostringstream os;
        os << "population " << top << " in the top basis states at t = " << t_ps
           << " ps exceeds " << cfg_.truncation_threshold << "; increase basis.j_max (now "
           << packet.basis.j_max << ")";
        throw TruncationError(os.str(), packet.basis.j_max, top);
    }
}

void Propagator::step_numerically(WavePacket& packet, double t_from, double t_to, double* max_boundary) const
{
    const auto cos2 = CosSqOperator::build(packet.basis);
    const double sign = t_to > t_from ? 1.0 : -1.0;
    const double tu = units_.time_ps();
    const double h_max = cfg_.dt * tu;
    const double dw_tol = cfg_.dw_step_fraction * peak_dw_;
    const double h_min = 1e-14 * std::max(1.0, std::abs(t_to - t_from));

    auto variation = [this](double a, double b) {
        const double wa = delta_omega_at(a), wb = delta_omega_at(b), wm = delta_omega_at(0.5 * (a + b));
        return std::max({std::abs(wb - wa), std::abs(wm - wa), std::abs(wb - wm)});
    };

    if (cfg_.method == PropagationMethod::AdaptiveExplicit) {
        const auto js = packet.basis.j_values();
        std::vector<double> rot(js.size());
        for (std::size_t i = 0; i < js.size(); ++i) rot[i] = js[i] * (js[i] + 1.0);
        // Dormand-Prince 5(4) tableau
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;
        double t = t_from;
        double h = std::min(h_max, std::abs(t_to - t_from)) / tu * 0.1;   // reduced
        int rejections = 0;
        while (sign * (t_to - t) > h_min) {
            const double remaining = std::abs(t_to - t) / tu;
            h = std::min(h, remaining);
            const double hs = sign * h;
            auto f = [&](double tt_ps, const Eigen::VectorXcd& y) {
                return schrodinger_rhs(y, cos2, rot, delta_omega_at(tt_ps));
            };
            const auto& y = packet.amplitudes;
            const double hp = hs * tu;   // step in ps for time arguments
            Eigen::VectorXcd k1 = f(t, y);
            Eigen::VectorXcd k2 = f(t + c2 * hp, y + hs * (a21 * k1));
            Eigen::VectorXcd k3 = f(t + c3 * hp, y + hs * (a31 * k1 + a32 * k2));
            Eigen::VectorXcd k4 = f(t + c4 * hp, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            Eigen::VectorXcd k5 = f(t + c5 * hp, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            Eigen::VectorXcd k6 = f(t + hp, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Eigen::VectorXcd y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Eigen::VectorXcd k7 = f(t + hp, y5);
            const Eigen::VectorXcd err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double err_norm = err.cwiseAbs().maxCoeff() / cfg_.tolerance;
            if (err_norm <= 1.0) {
                packet.amplitudes = y5;
                t = (std::abs(t_to - (t + hp)) <= h_min) ? t_to : t + hp;
                packet.tau = units_.to_reduced_time(t);
                check_boundary(packet, t, max_boundary);
                rejections = 0;
            } else if (++rejections > 60) {
                throw NumericalError("adaptive-explicit: step rejection cascade near t = " + std::to_string(t)
                                     + " ps (problem is stiff for an explicit scheme)");
            }
            const double factor = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
            h = std::min(h, h_max / tu);
            if (h * tu < h_min) throw NumericalError("adaptive-explicit: step size underflow");
        }
        packet.tau = units_.to_reduced_time(t_to);
        return;
    }

    static const double s3 = std::sqrt(3.0);
    static const double alpha1 = (3.0 - 2.0 * s3) / 12.0, alpha2 = (3.0 + 2.0 * s3) / 12.0;
    double t = t_from;
    while (sign * (t_to - t) > h_min) {
        double h = std::min(h_max, std::abs(t_to - t));
        while (h > h_min && variation(t, t + sign * h) > dw_tol) h *= 0.5;
        const double t_next = (h == std::abs(t_to - t)) ? t_to : t + sign * h;
        const double hs = (t_next - t) / tu;   // signed reduced step
        if (cfg_.method == PropagationMethod::EigenbasisExponential) {
            // commutator-free Magnus: two exact exponentials with dw sampled at Gauss points
            const double g1 = t + (0.5 - s3 / 6.0) * (t_next - t);
            const double g2 = t + (0.5 + s3 / 6.0) * (t_next - t);
            const double w1 = delta_omega_at(g1), w2 = delta_omega_at(g2);
            apply_exponential(packet.amplitudes, cos2, 2.0 * (alpha2 * w1 + alpha1 * w2), 0.5 * hs);
            apply_exponential(packet.amplitudes, cos2, 2.0 * (alpha1 * w1 + alpha2 * w2), 0.5 * hs);
        } else {
            apply_cayley(packet.amplitudes, cos2, delta_omega_at(0.5 * (t + t_next)), hs);
        }
        t = t_next;
        packet.tau = units_.to_reduced_time(t);
        check_boundary(packet, t, max_boundary);
    }
    packet.tau = units_.to_reduced_time(t_to);
}

WavePacket Propagator::advance(WavePacket packet, double t_target, double* max_boundary) const
{
    const double t_now = units_.to_ps(packet.tau);
    check_boundary(packet, t_now, max_boundary);
    if (t_target == t_now) return packet;

    std::vector<double> pts{t_now};
    if (!support_.empty()) {
        for (double bp : {support_.begin_ps, support_.end_ps})
            if ((bp - t_now) * (bp - t_target) < 0.0) pts.push_back(bp);
    }
    pts.push_back(t_target);
    if (t_target > t_now)
        std::sort(pts.begin(), pts.end());
    else
        std::sort(pts.begin(), pts.end(), std::greater<>());

    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        const double a = pts[s], b = pts[s + 1];
        const double mid = 0.5 * (a + b);
        if (!support_.empty() && mid > support_.begin_ps && mid < support_.end_ps) {
            step_numerically(packet, a, b, max_boundary);
        } else {
            packet = evolve_field_free(packet, units_.to_reduced_time(b) - units_.to_reduced_time(a));
            packet.tau = units_.to_reduced_time(b);
        }
    }
    return packet;
}

TrajectoryRecord Propagator::record(const WavePacket& initial, const std::vector<double>& times) const
{
    TrajectoryRecord rec;
    rec.times_ps.reserve(times.size());
    rec.packets.reserve(times.size());
    rec.delta_omega.reserve(times.size());
    WavePacket current = initial;
    double t_prev = units_.to_ps(initial.tau);
    for (double t : times) {
        if (t < t_prev - 1e-12 * std::max(1.0, std::abs(t)))
            throw ConfigError("record times must be ascending and not precede the initial time");
        current = advance(std::move(current), t, &rec.max_boundary_population);
        rec.times_ps.push_back(t);
        rec.packets.push_back(current);
        rec.delta_omega.push_back(delta_omega_at(t));
        t_prev = t;
    }
    return rec;
}

std::vector<double> record_grid(double t0, double t1, double stride)
{
    if (!(t1 > t0)) throw ConfigError("time window: t1 must exceed t0");
    if (!(stride > 0.0)) throw ConfigError("time window: stride must be positive");
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor((t1 - t0) / stride + 1e-9));
    for (long long k = 0; k <= n; ++k) out.push_back(t0 + static_cast<double>(k) * stride);
    if (t1 - out.back() > 1e-9 * stride) out.push_back(t1);
    return out;
}

TrajectoryRecord propagate_to_times(const WavePacket& initial, const MoleculeSpec& mol, const PulseEnvelope& pulse,
                                    double t0, const std::vector<double>& times, const PropagationConfig& cfg)
{
    if (std::abs(initial.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("propagate: initial packet must be normalized");
    const auto units = ReducedUnits::for_molecule(mol);
    WavePacket start = initial;
    start.tau = units.to_reduced_time(t0);

    const double peak_dw = reduced_coupling(mol, pulse.peak_intensity());
    while (true) {
        try {
            if (cfg.abort_on_truncation && !eigensolve_pendular(start.basis, peak_dw).converged[0])
                throw TruncationError("pendular ground state at peak field is not converged in the basis (j_max = "
                                          + std::to_string(start.basis.j_max) + ")",
                                      start.basis.j_max, 1.0);
            Propagator prop(mol, pulse, cfg);
            return prop.record(start, times);
        } catch (const TruncationError& e) {
            const int next = start.basis.j_max * 2;
            if (!cfg.auto_extend_basis || next > cfg.j_max_limit) throw;
            start = start.extended_to(next);
        }
    }
}

TrajectoryRecord propagate(const WavePacket& initial, const MoleculeSpec& mol, const PulseEnvelope& pulse,
                           double t0, double t1, const PropagationConfig& cfg)
{
    cfg.validate();
    return propagate_to_times(initial, mol, pulse, t0, record_grid(t0, t1, cfg.record_stride_ps), cfg);
}

TruncationReport check_truncation(const TrajectoryRecord& record, double threshold)
{
    if (record.packets.empty()) throw std::invalid_argument("check_truncation: empty record");
    TruncationReport r;
    r.threshold = threshold;
    r.max_boundary_population = record.max_boundary_population;
    for (const auto& p : record.packets) r.max_boundary_population = std::max(r.max_boundary_population, p.boundary_population());
    r.passed = r.max_boundary_population < threshold;
    return r;
}

namespace {

constexpr std::array<char, 8> snapshot_magic{'R', 'W', 'P', 'K', 'S', 'N', 'A', 'P'};

template <class T>
void put(std::ofstream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("snapshot file truncated");
    return v;
}

} // namespace

void write_snapshots(const std::filesystem::path& path, const TrajectoryRecord& record)
{
    if (record.packets.empty()) throw std::invalid_argument("write_snapshots: empty record");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write snapshot file " + path.string());
    const auto& basis = record.packets.front().basis;
    out.write(snapshot_magic.data(), snapshot_magic.size());
    put<std::uint32_t>(out, 1);
    put<std::int32_t>(out, basis.j_max);
    put<std::int32_t>(out, basis.m);
    put<std::int32_t>(out, static_cast<std::int32_t>(basis.parity));
    put<std::uint64_t>(out, record.packets.size());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(basis.size()));
    for (std::size_t i = 0; i < record.packets.size(); ++i) {
        const auto& p = record.packets[i];
        if (!(p.basis == basis)) throw std::invalid_argument("write_snapshots: mixed bases in record");
        put<double>(out, record.times_ps[i]);
        put<double>(out, record.delta_omega[i]);
        for (Eigen::Index k = 0; k < p.amplitudes.size(); ++k) {
            put<double>(out, p.amplitudes[k].real());
            put<double>(out, p.amplitudes[k].imag());
        }
    }
    if (!out) throw IoError("failed writing snapshot file " + path.string());
}

TrajectoryRecord read_snapshots(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot file " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != snapshot_magic) throw IoError("not a snapshot file: " + path.string());
    if (get<std::uint32_t>(in) != 1) throw IoError("unsupported snapshot version");
    BasisSpec basis;
    basis.j_max = get<std::int32_t>(in);
    basis.m = get<std::int32_t>(in);
    basis.parity = static_cast<Parity>(get<std::int32_t>(in));
    const auto n_snap = get<std::uint64_t>(in);
    const auto n_amp = get<std::uint64_t>(in);
    if (n_amp != static_cast<std::uint64_t>(basis.size())) throw IoError("snapshot basis size mismatch");
    TrajectoryRecord rec;
    for (std::uint64_t s = 0; s < n_snap; ++s) {
        WavePacket p;
        p.basis = basis;
        rec.times_ps.push_back(get<double>(in));
        rec.delta_omega.push_back(get<double>(in));
        p.amplitudes.resize(static_cast<Eigen::Index>(n_amp));
        for (std::uint64_t k = 0; k < n_amp; ++k) {
            const double re = get<double>(in);
            const double im = get<double>(in);
            p.amplitudes[static_cast<Eigen::Index>(k)] = {re, im};
        }
        rec.packets.push_back(std::move(p));
    }
    return rec;
}

} // namespace rotalign
