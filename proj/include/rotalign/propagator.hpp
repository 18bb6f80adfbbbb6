#pragma once

#include "rotalign/hamiltonian.hpp"
#include "rotalign/model.hpp"
#include "rotalign/pulse.hpp"

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace rotalign {

struct WavePacket {
    BasisSpec basis;
    Eigen::VectorXcd amplitudes;
    double tau = 0.0;   // reduced time

    static WavePacket basis_state(const BasisSpec& basis, int j, double tau = 0.0);

    double norm() const { return amplitudes.norm(); }
    std::complex<double> amplitude(int j) const;

    /// Weight in the two highest-J basis states.
    double boundary_population() const;

    /// Same state embedded in a larger basis (zero amplitudes for the new J).
    WavePacket extended_to(int j_max) const;
};

enum class PropagationMethod {
    EigenbasisExponential,   // exact exponentials of piecewise-constant H, 4th-order commutator-free
    ImplicitMidpoint,        // Crank-Nicolson / Cayley, 2nd order, unitary
    AdaptiveExplicit         // Dormand-Prince 5(4) with step-size control
};

std::string to_string(PropagationMethod m);
PropagationMethod parse_method(const std::string& text);

struct PropagationConfig {
    PropagationMethod method = PropagationMethod::EigenbasisExponential;
    double dt = 0.02;                  // maximum step, reduced time
    double tolerance = 1e-10;          // local error tolerance for AdaptiveExplicit
    double record_stride_ps = 0.25;
    double dw_step_fraction = 1e-3;    // max change of dw per step relative to the peak
    double truncation_threshold = 1e-8;
    double handoff_threshold = 1e-6;   // envelope level below which evolution is field-free
    bool abort_on_truncation = true;
    bool auto_extend_basis = true;     // retry with doubled j_max on truncation
    int j_max_limit = 320;

    void validate() const;
};

struct TrajectoryRecord {
    std::vector<double> times_ps;
    std::vector<WavePacket> packets;
    std::vector<double> delta_omega;   // instantaneous coupling at each snapshot
    double max_boundary_population = 0.0;

    std::size_t size() const { return times_ps.size(); }
};

/// Time evolution of one molecule in one pulse. Immutable after
/// construction and safe to share between threads.
class Propagator {
public:
    Propagator(MoleculeSpec mol, PulseEnvelope pulse, PropagationConfig cfg);

    const ReducedUnits& units() const { return units_; }
    const PulseEnvelope& pulse() const { return pulse_; }
    const PropagationConfig& config() const { return cfg_; }
    double peak_delta_omega() const { return peak_dw_; }
    double delta_omega_at(double t_ps) const;

    /// Evolves the packet from its own time to t_ps (forward or backward).
    /// `max_boundary` accumulates the largest top-of-basis weight seen.
    WavePacket advance(WavePacket packet, double t_ps, double* max_boundary = nullptr) const;

    /// Snapshots at ascending times, all >= the initial packet's time.
    TrajectoryRecord record(const WavePacket& initial, const std::vector<double>& times_ps) const;

private:
    void step_numerically(WavePacket& packet, double t_from_ps, double t_to_ps, double* max_boundary) const;
    void check_boundary(const WavePacket& packet, double t_ps, double* max_boundary) const;

    MoleculeSpec mol_;
    PulseEnvelope pulse_;
    PropagationConfig cfg_;
    ReducedUnits units_;
    double peak_dw_;
    TimeWindow support_;
};

/// Record times t0, t0 + stride, ..., t1 (t1 always included).
std::vector<double> record_grid(double t0_ps, double t1_ps, double stride_ps);

/// Solves i dpsi/dtau = [J^2 - dw(tau) cos^2 theta] psi from t0 to t1. With
/// auto_extend_basis the basis is doubled and the run repeated on truncation.
TrajectoryRecord propagate(const WavePacket& initial, const MoleculeSpec& mol, const PulseEnvelope& pulse,
                           double t0_ps, double t1_ps, const PropagationConfig& cfg);

/// Same, recording at explicit times (ascending, >= t0).
TrajectoryRecord propagate_to_times(const WavePacket& initial, const MoleculeSpec& mol, const PulseEnvelope& pulse,
                                    double t0_ps, const std::vector<double>& times_ps, const PropagationConfig& cfg);

/// c_J -> c_J exp(-i J(J+1) duration), duration in reduced time.
WavePacket evolve_field_free(const WavePacket& packet, double duration);

struct TruncationReport {
    double max_boundary_population = 0.0;
    double threshold = 0.0;
    bool passed = true;
};

TruncationReport check_truncation(const TrajectoryRecord& record, double threshold);

/// Binary snapshot file: "RWPKSNAP", u32 version, i32 j_max, i32 m, i32 parity,
/// u64 snapshots, u64 amplitudes, then per snapshot f64 t_ps, f64 dw and
/// the amplitudes as (re, im) f64 pairs. Little-endian. Packets read back
/// carry tau = 0; the times are in times_ps.
void write_snapshots(const std::filesystem::path& path, const TrajectoryRecord& record);
TrajectoryRecord read_snapshots(const std::filesystem::path& path);

} // namespace rotalign
