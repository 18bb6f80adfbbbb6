#pragma once

#include "rotalign/hamiltonian.hpp"
#include "rotalign/model.hpp"
#include "rotalign/pulse.hpp"

#include <vector>

namespace rotalign {

struct AlignmentTrace;

struct AnalysisWindow {
    double t_start_ps = 0.0;
    double t_end_ps = 0.0;
    double length() const { return t_end_ps - t_start_ps; }
};

struct OscillationReport {
    AnalysisWindow window;
    double dominant_frequency = 0.0;   // 1/ps
    double amplitude = 0.0;            // of the fitted sinusoid
    double phase = 0.0;                // rad, y ~ mean + amplitude cos(2 pi f (t - t_start) - phase)
    double mean_level = 0.0;
    int samples = 0;
    bool tie_broken = false;           // equal spectral peaks; the lowest frequency was taken
    double single_frequency = 0.0;     // best single-sinusoid frequency (blends unresolved beats)
    double secondary_frequency = 0.0;  // weaker component of a two-sinusoid fit, 0 if not resolved
    double secondary_amplitude = 0.0;
};

/// Least-squares periodogram of the detrended samples.
struct SpectrumEstimate {
    std::vector<double> frequency;     // 1/ps
    std::vector<double> power;         // residual variance explained by a sinusoid
};

SpectrumEstimate periodogram(const std::vector<double>& t_ps, const std::vector<double>& y, AnalysisWindow window);

/// Dominant oscillation in a window: periodogram seed refined by a
/// nonlinear least-squares fit of offset + linear trend + one or two sinusoids.
OscillationReport dominant_frequency(const std::vector<double>& t_ps, const std::vector<double>& y,
                                     AnalysisWindow window);

/// Uses the detector-plane alignment of the trace.
OscillationReport dominant_frequency(const AlignmentTrace& trace, AnalysisWindow window);

/// Successive sinusoid extraction: each component is fitted to the residual
/// of the previous ones. Components are in extraction order.
std::vector<OscillationReport> spectral_components(const std::vector<double>& t_ps, const std::vector<double>& y,
                                                   AnalysisWindow window, int count);

struct RevivalReport {
    AnalysisWindow window;
    double contrast = 0.0;             // max - min over one revival period after the pulse
    double mean_level = 0.0;           // time average over the same window
    double period_estimate = 0.0;      // ps, autocorrelation peak; NaN when undetermined
};

/// Post-pulse revival metrics. The samples must cover at least one
/// revival period after pulse_end.
RevivalReport revival_contrast(const std::vector<double>& t_ps, const std::vector<double>& y, double pulse_end_ps,
                               double revival_period_ps);

RevivalReport revival_contrast(const AlignmentTrace& trace, double pulse_end_ps, double revival_period_ps);

/// Interval where the envelope is >= 95% of the peak, with a guard of one
/// oscillation period (at most a quarter of the interval) removed at each end.
AnalysisWindow plateau_window(const PulseEnvelope& pulse, double oscillation_period_ps);

/// Beat frequency (1/ps) between two adiabatically labelled pendular states.
double gap_frequency(const PendularSpectrum& spectrum, int label_a, int label_b, const ReducedUnits& units);

/// |f_measured - f_gap| / f_gap for the dominant oscillation in the window.
double compare_beat_to_gap(const std::vector<double>& t_ps, const std::vector<double>& y, AnalysisWindow window,
                           const PendularSpectrum& spectrum, int label_a, int label_b, const ReducedUnits& units);

} // namespace rotalign
