#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace rotalign {

/// Gaussian intensity profile, I(t) = exp(-4 ln2 (t - t_center)^2 / fwhm^2).
struct GaussianShape {
    double fwhm_ps = 0.45;
    double t_center_ps = 0.0;
};

enum class EdgeSmoothing { ErrorFunction, CosineSquared };

/// Flat-top pulse with smooth edges. Timing is given by 10%/90% points:
/// the rise reaches 10% at t_start and 90% at t_start + rise; the plateau
/// lasts from that 90% point to the 90% point of the falling edge.
struct RampPlateauShape {
    double rise_ps = 10.0;
    double plateau_ps = 40.0;
    double fall_ps = 10.0;
    double t_start_ps = 0.0;
    EdgeSmoothing smoothing = EdgeSmoothing::ErrorFunction;

    /// FWHM in intensity implied by the edge and plateau durations.
    double fwhm_ps() const { return plateau_ps + 0.5 * (rise_ps + fall_ps); }
};

/// Piecewise-linear profile from samples; zero outside the sampled range.
struct SampledShape {
    std::vector<double> t_ps;
    std::vector<double> value;   // relative intensity in [0, 1], max = 1
};

struct TimeWindow {
    double begin_ps = 0.0;
    double end_ps = 0.0;
    bool empty() const { return !(end_ps > begin_ps); }
};

class PulseEnvelope {
public:
    using Shape = std::variant<GaussianShape, RampPlateauShape, SampledShape>;

    PulseEnvelope() = default;
    PulseEnvelope(Shape shape, double peak_intensity_W_cm2);

    const Shape& shape() const { return shape_; }
    double peak_intensity() const { return peak_intensity_; }

    /// Relative envelope in [0, 1].
    double shape_at(double t_ps) const;

    /// Intensity in W/cm^2.
    double intensity_at(double t_ps) const { return peak_intensity_ * shape_at(t_ps); }

    /// Interval outside of which shape_at < threshold. Empty for a zero-intensity pulse.
    TimeWindow support(double threshold = 1e-6) const;

    /// Interval where the envelope is at least `level` of the peak.
    TimeWindow above(double level) const;

    PulseEnvelope with_peak(double peak_intensity_W_cm2) const;

    std::string describe() const;

    void validate() const;

private:
    Shape shape_ = GaussianShape{};
    double peak_intensity_ = 0.0;
};

/// I(t) in W/cm^2.
double envelope_at(const PulseEnvelope& pulse, double t_ps);

/// Reads a two-column (time [ps], relative intensity) text profile. Lines
/// starting with '#' are comments; columns may be separated by whitespace or commas.
PulseEnvelope load_sampled_profile(const std::filesystem::path& path, double peak_intensity_W_cm2 = 1.0);

/// Parses the same format from an in-memory string.
PulseEnvelope parse_sampled_profile(const std::string& text, double peak_intensity_W_cm2 = 1.0);

void write_sampled_profile(const std::filesystem::path& path, const SampledShape& shape);

} // namespace rotalign
