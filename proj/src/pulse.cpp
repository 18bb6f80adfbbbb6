#include "rotalign/pulse.hpp"

#include "rotalign/errors.hpp"
#include "rotalign/model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace rotalign {

namespace {

constexpr double four_ln2 = 2.772588722239781;

// Standard edge e(u) rising from 0 to 1; u measured from the 50% point.
struct ErfEdge {
    double width; // erf argument scale
    explicit ErfEdge(double t_10_90) : width(t_10_90 / (2.0 * boost::math::erf_inv(0.8))) {}
    double operator()(double u) const { return 0.5 * std::erfc(-u / width); }
    // distance from 50% point to the point where e = level
    double offset(double level) const { return width * boost::math::erf_inv(2.0 * level - 1.0); }
};

// sin^2 over a finite ramp of length `span`, 50% point at u = 0.
struct CosSqEdge {
    double span;
    explicit CosSqEdge(double t_10_90)
    {
        const double a = std::asin(std::sqrt(0.1));
        const double b = std::asin(std::sqrt(0.9));
        span = t_10_90 * (constants::pi / 2.0) / (b - a);
    }
    double operator()(double u) const
    {
        const double x = u / span + 0.5;
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double s = std::sin(0.5 * constants::pi * x);
        return s * s;
    }
    double offset(double level) const
    {
        if (level <= 0.0) return -0.5 * span;
        if (level >= 1.0) return 0.5 * span;
        return span * (std::asin(std::sqrt(level)) / (0.5 * constants::pi) - 0.5);
    }
};

template <class Edge>
struct RampGeometry {
    Edge rise;
    Edge fall;
    double rise_mid;  // 50% point of rising edge
    double fall_mid;  // 50% point of falling edge

    explicit RampGeometry(const RampPlateauShape& s) : rise(s.rise_ps), fall(s.fall_ps)
    {
        rise_mid = s.t_start_ps - rise.offset(0.1);
        const double rise_90 = s.t_start_ps + s.rise_ps;
        const double fall_90 = rise_90 + s.plateau_ps;
        fall_mid = fall_90 + fall.offset(0.9);
    }

    double value(double t) const { return rise(t - rise_mid) * fall(fall_mid - t); }
};

template <class F>
auto with_ramp(const RampPlateauShape& s, F&& f)
{
    if (s.smoothing == EdgeSmoothing::ErrorFunction)
        return f(RampGeometry<ErfEdge>(s));
    return f(RampGeometry<CosSqEdge>(s));
}

double sampled_value(const SampledShape& s, double t)
{
    if (s.t_ps.empty() || t < s.t_ps.front() || t > s.t_ps.back()) return 0.0;
    const auto it = std::upper_bound(s.t_ps.begin(), s.t_ps.end(), t);
    if (it == s.t_ps.end()) return s.value.back();
    const auto i = static_cast<std::size_t>(it - s.t_ps.begin());
    const double t0 = s.t_ps[i - 1], t1 = s.t_ps[i];
    const double a = (t - t0) / (t1 - t0);
    return (1.0 - a) * s.value[i - 1] + a * s.value[i];
}

} // namespace

PulseEnvelope::PulseEnvelope(Shape shape, double peak_intensity_W_cm2)
    : shape_(std::move(shape)), peak_intensity_(peak_intensity_W_cm2)
{
    validate();
}

void PulseEnvelope::validate() const
{
    if (!(peak_intensity_ >= 0.0) || !std::isfinite(peak_intensity_))
        throw ConfigError("pulse: peak intensity must be nonnegative");
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianShape>) {
                if (!(s.fwhm_ps > 0.0)) throw ConfigError("pulse: gaussian fwhm must be positive");
            } else if constexpr (std::is_same_v<T, RampPlateauShape>) {
                if (!(s.rise_ps > 0.0) || !(s.fall_ps > 0.0))
                    throw ConfigError("pulse: rise and fall times must be positive");
                if (!(s.plateau_ps >= 0.0)) throw ConfigError("pulse: plateau must be nonnegative");
            } else {
                if (s.t_ps.size() < 2 || s.t_ps.size() != s.value.size())
                    throw ConfigError("pulse: sampled profile needs at least two points");
                for (std::size_t i = 1; i < s.t_ps.size(); ++i)
                    if (!(s.t_ps[i] > s.t_ps[i - 1]))
                        throw ConfigError("pulse: sampled times must be strictly increasing");
                double vmax = 0.0;
                for (double v : s.value) {
                    if (!(v >= 0.0) || v > 1.0) throw ConfigError("pulse: sampled values must lie in [0, 1]");
                    vmax = std::max(vmax, v);
                }
                if (vmax != 1.0) throw ConfigError("pulse: sampled profile must be normalized to max 1");
            }
        },
        shape_);
}

double PulseEnvelope::shape_at(double t) const
{
    return std::visit(
        [t](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianShape>) {
                const double u = t - s.t_center_ps;
                return std::exp(-four_ln2 * u * u / (s.fwhm_ps * s.fwhm_ps));
            } else if constexpr (std::is_same_v<T, RampPlateauShape>) {
                return with_ramp(s, [t](const auto& g) { return g.value(t); });
            } else {
                return sampled_value(s, t);
            }
        },
        shape_);
}

TimeWindow PulseEnvelope::support(double threshold) const
{
    if (peak_intensity_ == 0.0) return {};
    return above(threshold);
}

TimeWindow PulseEnvelope::above(double level) const
{
    return std::visit(
        [level](const auto& s) -> TimeWindow {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianShape>) {
                const double half = s.fwhm_ps * std::sqrt(-std::log(level) / four_ln2);
                return {s.t_center_ps - half, s.t_center_ps + half};
            } else if constexpr (std::is_same_v<T, RampPlateauShape>) {
                return with_ramp(s, [level](const auto& g) {
                    return TimeWindow{g.rise_mid + g.rise.offset(level), g.fall_mid - g.fall.offset(level)};
                });
            } else {
                // first and last crossing of the level on the polyline
                TimeWindow w{s.t_ps.back(), s.t_ps.front()};
                bool found = false;
                for (std::size_t i = 0; i + 1 < s.t_ps.size(); ++i) {
                    const double v0 = s.value[i], v1 = s.value[i + 1];
                    if (std::max(v0, v1) < level) continue;
                    const double t0 = s.t_ps[i], t1 = s.t_ps[i + 1];
                    const double a = v0 >= level ? 0.0 : (level - v0) / (v1 - v0);
                    const double b = v1 >= level ? 1.0 : (level - v0) / (v1 - v0);
                    w.begin_ps = std::min(w.begin_ps, t0 + a * (t1 - t0));
                    w.end_ps = std::max(w.end_ps, t0 + b * (t1 - t0));
                    found = true;
                }
                if (!found) return {};
                return w;
            }
        },
        shape_);
}

PulseEnvelope PulseEnvelope::with_peak(double peak) const { return PulseEnvelope(shape_, peak); }

std::string PulseEnvelope::describe() const
{
    std::ostringstream os;
    os << std::setprecision(10);
    std::visit(
        [&os](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianShape>)
                os << "gaussian(fwhm_ps=" << s.fwhm_ps << ", t_center_ps=" << s.t_center_ps << ")";
            else if constexpr (std::is_same_v<T, RampPlateauShape>)
                os << "ramp_plateau(rise_ps=" << s.rise_ps << ", plateau_ps=" << s.plateau_ps
                   << ", fall_ps=" << s.fall_ps << ", t_start_ps=" << s.t_start_ps << ", smoothing="
                   << (s.smoothing == EdgeSmoothing::ErrorFunction ? "erf" : "cos2") << ")";
            else
                os << "sampled(points=" << s.t_ps.size() << ")";
        },
        shape_);
    os << " peak_W_cm2=" << peak_intensity_;
    return os.str();
}

double envelope_at(const PulseEnvelope& pulse, double t_ps) { return pulse.intensity_at(t_ps); }

PulseEnvelope parse_sampled_profile(const std::string& text, double peak)
{
    std::vector<std::pair<double, double>> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double t = 0.0, v = 0.0;
        if (!(ls >> t)) continue; // blank line
        if (!(ls >> v))
            throw ConfigError("profile line " + std::to_string(lineno) + ": expected two columns");
        std::string extra;
        if (ls >> extra)
            throw ConfigError("profile line " + std::to_string(lineno) + ": unexpected third column");
        if (v < 0.0)
            throw ConfigError("profile line " + std::to_string(lineno) + ": negative intensity");
        if (!std::isfinite(t) || !std::isfinite(v))
            throw ConfigError("profile line " + std::to_string(lineno) + ": non-finite value");
        rows.emplace_back(t, v);
    }
    if (rows.empty()) throw ConfigError("profile: no data rows");
    if (rows.size() < 2) throw ConfigError("profile: at least two samples are required");

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw ConfigError("profile: duplicate timestamp " + std::to_string(rows[i].first));

    double vmax = 0.0;
    for (const auto& r : rows) vmax = std::max(vmax, r.second);
    if (!(vmax > 0.0)) throw ConfigError("profile: all intensities are zero");

    SampledShape s;
    for (const auto& [t, v] : rows) {
        s.t_ps.push_back(t);
        s.value.push_back(v == vmax ? 1.0 : v / vmax);
    }
    return PulseEnvelope(std::move(s), peak);
}

PulseEnvelope load_sampled_profile(const std::filesystem::path& path, double peak)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sampled_profile(buf.str(), peak);
}

void write_sampled_profile(const std::filesystem::path& path, const SampledShape& shape)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profile " + path.string());
    out << "# time_ps relative_intensity\n" << std::setprecision(17);
    for (std::size_t i = 0; i < shape.t_ps.size(); ++i)
        out << shape.t_ps[i] << ' ' << shape.value[i] << '\n';
}

} // namespace rotalign
