#pragma once

#include "rotalign/analysis.hpp"
#include "rotalign/observables.hpp"
#include "rotalign/propagator.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rotalign {

/// Coaxial Gaussian alignment and probe foci. The probe detects with weight
/// I_probe^n; longitudinal variation over the interaction region is neglected.
struct FocalGeometry {
    double w_align_um = 45.0;     // 1/e^2 intensity radius
    double w_probe_um = 30.0;
    int probe_order = 3;
    int n_bins = 16;

    void validate() const;

    /// kappa = n w_align^2 / w_probe^2; P(fraction >= f) = 1 - f^kappa.
    double kappa() const;
};

struct IntensityDistribution {
    std::vector<double> fractions;   // of the peak alignment intensity, descending
    std::vector<double> weights;     // sum to 1
};

/// Equal-weight bins of the detected alignment-intensity distribution, each
/// represented by its median fraction. Bins with identical fractions are merged.
IntensityDistribution focal_weights(const FocalGeometry& geom);

/// Pointwise weighted mean of per-bin traces on a shared time grid.
AlignmentTrace volume_average(const std::vector<AlignmentTrace>& traces, const IntensityDistribution& dist);

/// Everything needed to run one molecule through one pulse shape.
struct SimulationSetup {
    MoleculeSpec molecule;
    PulseEnvelope pulse;
    BasisSpec basis;
    PropagationConfig propagation;
    DetectionModel detection;
    int initial_j = 0;
    int tracked_states = 6;

    /// Start of the integration: the earliest of the pulse support and t_first.
    double start_time(double t_first_ps) const;
};

/// Runs jobs 0..n-1 on a pool of `threads` workers. Exceptions are captured per job.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

/// Worker count from ROTALIGN_THREADS, falling back to the hardware concurrency.
int default_thread_count();

/// Single peak-intensity trace (no focal averaging) sampled at the delays.
AlignmentTrace run_single(const SimulationSetup& setup, const std::vector<double>& delays_ps);

/// Delay scan: one propagation per focal bin, probe delays are readout
/// times of the same propagation, then volume averaging.
AlignmentTrace run_delay_scan(const SimulationSetup& setup, const std::optional<FocalGeometry>& geom,
                              const std::vector<double>& delays_ps, int threads = 1);

struct ScanResult {
    std::vector<double> delays_ps;
    std::vector<double> intensities;             // W/cm^2
    std::vector<std::vector<double>> cos2_2d;    // [intensity][delay]
    std::vector<bool> row_ok;
    std::vector<std::string> row_error;
    std::vector<std::pair<std::string, std::string>> metadata;
};

/// Intensity x delay map. Failed rows are flagged (NaN entries) and the scan continues.
ScanResult run_intensity_scan(const SimulationSetup& setup, const std::optional<FocalGeometry>& geom,
                              const std::vector<double>& intensities, const std::vector<double>& delays_ps,
                              int threads = 1);

/// Field-free <cos^2 theta_2D> over one revival period after the pulse
/// (single intensity), evaluated analytically from the final packet.
struct PostPulseTrace {
    double pulse_end_ps = 0.0;
    double revival_period_ps = 0.0;
    std::vector<double> times_ps;
    std::vector<double> cos2_2d;
};

PostPulseTrace post_pulse_trace(const SimulationSetup& setup, double peak_intensity, int samples = 600);

struct SwitchOffSearch {
    std::vector<double> intensities;
    std::vector<double> contrast;
    std::vector<double> mean_level;
    bool interior_minimum = false;
    double minimizing_intensity = 0.0;
    double minimum_contrast = 0.0;
    double minimum_mean_level = 0.0;
};

/// Scans post-pulse revival contrast over intensities and refines the
/// deepest interior minimum by Brent minimization between its neighbours.
SwitchOffSearch find_switch_off(const SimulationSetup& setup, const std::vector<double>& intensities, int threads = 1);

/// Structural summary of an intensity x delay map.
struct MapStructure {
    AnalysisWindow plateau;                  // common window for the oscillation count
    double pulse_end_ps = 0.0;
    double revival_period_ps = 0.0;
    std::vector<double> plateau_frequency;   // single-sinusoid frequency, 1/ps
    std::vector<double> oscillation_count;   // frequency x window length
    std::vector<double> post_contrast;       // max - min over one revival period after the pulse
    std::vector<std::size_t> suppression_rows;
    bool counts_non_decreasing = false;
};

/// Rows whose post-pulse contrast is a local minimum below `suppression_fraction`
/// of the median row contrast are revival-suppression stripes.
MapStructure analyze_map(const ScanResult& scan, AnalysisWindow plateau, double pulse_end_ps, double revival_period_ps,
                         double suppression_fraction = 0.25);

} // namespace rotalign
