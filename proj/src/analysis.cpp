#include "rotalign/analysis.hpp"

#include "rotalign/errors.hpp"
#include "rotalign/observables.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rotalign {

namespace {

struct WindowSamples {
    Eigen::VectorXd t;
    Eigen::VectorXd y;
};

WindowSamples select(const std::vector<double>& t, const std::vector<double>& y, AnalysisWindow w)
{
    if (t.size() != y.size()) throw std::invalid_argument("analysis: time and value lengths differ");
    std::vector<double> ts, ys;
    const double eps = 1e-9 * std::max(1.0, std::abs(w.t_end_ps));
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= w.t_start_ps - eps && t[i] <= w.t_end_ps + eps) {
            ts.push_back(t[i]);
            ys.push_back(y[i]);
        }
    if (ts.size() < 2) throw std::invalid_argument("analysis: window contains fewer than 2 samples");
    WindowSamples s;
    s.t = Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    s.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    return s;
}

struct SinusoidFit {
    double rss = 0.0;
    Eigen::VectorXd coeff;   // offset, slope, cos, sin
};

Eigen::MatrixXd design(const WindowSamples& s, const double* freqs, int n_freq)
{
    const Eigen::Index n = s.t.size();
    const double t0 = s.t[0];
    const double tm = s.t.mean();
    Eigen::MatrixXd a(n, 2 + 2 * n_freq);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = s.t[i] - tm;
        for (int k = 0; k < n_freq; ++k) {
            const double arg = 2.0 * constants::pi * freqs[k] * (s.t[i] - t0);
            a(i, 2 + 2 * k) = std::cos(arg);
            a(i, 3 + 2 * k) = std::sin(arg);
        }
    }
    return a;
}

SinusoidFit fit_many(const WindowSamples& s, const double* freqs, int n_freq)
{
    const auto a = design(s, freqs, n_freq);
    SinusoidFit r;
    r.coeff = a.colPivHouseholderQr().solve(s.y);
    r.rss = (a * r.coeff - s.y).squaredNorm();
    return r;
}

SinusoidFit fit(const WindowSamples& s, double f, bool with_sinusoid = true)
{
    return fit_many(s, &f, with_sinusoid ? 1 : 0);
}

// Variable projection: residual of the linear least-squares fit at fixed frequencies.
struct PairResidual {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const WindowSamples* s;
    int inputs() const { return 2; }
    int values() const { return static_cast<int>(s->t.size()); }
    int operator()(const Eigen::VectorXd& f, Eigen::VectorXd& out) const
    {
        const double freqs[2] = {f[0], f[1]};
        const auto a = design(*s, freqs, 2);
        out = a * a.colPivHouseholderQr().solve(s->y) - s->y;
        return 0;
    }
};

double median_spacing(const Eigen::VectorXd& t)
{
    std::vector<double> d;
    for (Eigen::Index i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
}

SpectrumEstimate periodogram_of(const WindowSamples& s, double* trend_rss)
{
    const double span = s.t[s.t.size() - 1] - s.t[0];
    const double rss0 = fit(s, 0.0, false).rss;
    if (trend_rss) *trend_rss = rss0;
    SpectrumEstimate est;
    if (!(span > 0.0)) return est;
    // below half a cycle per window a sinusoid is indistinguishable from the trend
    const double df = 1.0 / (8.0 * span);
    const double f_max = 0.5 / median_spacing(s.t);
    const auto n = static_cast<Eigen::Index>(s.t.size());
    for (int k = 4; k * df <= f_max * (1.0 + 1e-12); ++k) {
        const double f = k * df;
        est.frequency.push_back(f);
        est.power.push_back(std::max(0.0, rss0 - fit(s, f).rss) / static_cast<double>(n));
    }
    return est;
}

OscillationReport dominant_of(const WindowSamples& s, AnalysisWindow w)
{
    OscillationReport rep;
    rep.window = w;
    rep.samples = static_cast<int>(s.t.size());
    rep.mean_level = s.y.mean();

    double rss0 = 0.0;
    const auto est = periodogram_of(s, &rss0);
    const double scale = std::max(1.0, s.y.cwiseAbs().maxCoeff());
    if (est.frequency.empty() || rss0 <= 1e-24 * scale * scale * static_cast<double>(s.t.size())) return rep;

    std::size_t best = 0;
    for (std::size_t i = 1; i < est.power.size(); ++i)
        if (est.power[i] > est.power[best]) best = i;
    for (std::size_t i = 0; i < best; ++i)
        if (est.power[i] >= est.power[best] * (1.0 - 1e-12)) {
            best = i;
            rep.tie_broken = true;
            break;
        }
    if (!rep.tie_broken) {
        for (std::size_t i = best + 1; i < est.power.size(); ++i)
            if (est.power[i] >= est.power[best] * (1.0 - 1e-12)) {
                rep.tie_broken = true;
                break;
            }
    }
    const double df = est.frequency.size() > 1 ? est.frequency[1] - est.frequency[0] : 0.25 * est.frequency[0];
    const double lo = std::max(est.frequency.front(), est.frequency[best] - df);
    const double hi = est.frequency[best] + df;
    const auto [f_opt, rss_opt] = boost::math::tools::brent_find_minima(
        [&s](double f) { return fit(s, f).rss; }, lo, hi, std::numeric_limits<double>::digits / 2);
    const auto r = fit(s, f_opt);
    rep.dominant_frequency = f_opt;
    rep.single_frequency = f_opt;
    rep.amplitude = std::hypot(r.coeff[2], r.coeff[3]);
    rep.phase = std::atan2(r.coeff[3], r.coeff[2]);

    // Two unresolved beats pull a single-sinusoid estimate; refit with a pair
    // seeded from a coarse grid and keep the stronger component.
    const double span = s.t[s.t.size() - 1] - s.t[0];
    const double f_min = est.frequency.front(), f_max = est.frequency.back();
    const double f_top = std::min(f_max, std::max(4.0 * f_opt, f_min + 8.0 * df));
    const int n_grid = std::max(8, std::min(120, static_cast<int>((f_top - f_min) / (2.0 * df))));
    const double step = (f_top - f_min) / n_grid;
    double grid_rss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd pair(2);
    for (int a = 0; a <= n_grid; ++a)
        for (int b = a + 1; b <= n_grid; ++b) {
            const double freqs[2] = {f_min + a * step, f_min + b * step};
            const double v = fit_many(s, freqs, 2).rss;
            if (v < grid_rss) {
                grid_rss = v;
                pair << freqs[0], freqs[1];
            }
        }
    PairResidual functor{&s};
    Eigen::NumericalDiff<PairResidual> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<PairResidual>> lm(numdiff);
    Eigen::VectorXd refined = pair;
    lm.minimize(refined);
    const bool usable = refined.allFinite() && refined.minCoeff() >= f_min && refined.maxCoeff() <= f_max &&
                        std::abs(refined[0] - refined[1]) >= 0.25 / span;
    if (usable) pair = refined;
    const double freqs[2] = {pair[0], pair[1]};
    const auto two = fit_many(s, freqs, 2);
    if (two.rss < rss_opt * (1.0 - 1e-6) && std::abs(pair[0] - pair[1]) >= 0.25 / span) {
        const double amp0 = std::hypot(two.coeff[2], two.coeff[3]), amp1 = std::hypot(two.coeff[4], two.coeff[5]);
        const int k = amp0 >= amp1 ? 0 : 1;
        rep.dominant_frequency = pair[k];
        rep.amplitude = k == 0 ? amp0 : amp1;
        rep.phase = std::atan2(two.coeff[3 + 2 * k], two.coeff[2 + 2 * k]);
        rep.secondary_frequency = pair[1 - k];
        rep.secondary_amplitude = k == 0 ? amp1 : amp0;
    }
    return rep;
}

} // namespace

SpectrumEstimate periodogram(const std::vector<double>& t, const std::vector<double>& y, AnalysisWindow w)
{
    return periodogram_of(select(t, y, w), nullptr);
}

OscillationReport dominant_frequency(const std::vector<double>& t, const std::vector<double>& y, AnalysisWindow w)
{
    return dominant_of(select(t, y, w), w);
}

OscillationReport dominant_frequency(const AlignmentTrace& trace, AnalysisWindow w)
{
    return dominant_frequency(trace.times_ps, trace.cos2_2d, w);
}

std::vector<OscillationReport> spectral_components(const std::vector<double>& t, const std::vector<double>& y,
                                                   AnalysisWindow w, int count)
{
    auto s = select(t, y, w);
    std::vector<OscillationReport> out;
    for (int c = 0; c < count; ++c) {
        auto rep = dominant_of(s, w);
        if (rep.amplitude == 0.0) break;
        out.push_back(rep);
        // remove the fitted sinusoid (but keep offset and trend in the residual fit of the next pass)
        const double t0 = s.t[0];
        for (Eigen::Index i = 0; i < s.t.size(); ++i) {
            const double arg = 2.0 * constants::pi * rep.dominant_frequency * (s.t[i] - t0);
            s.y[i] -= rep.amplitude * std::cos(arg - rep.phase);
        }
    }
    return out;
}

RevivalReport revival_contrast(const std::vector<double>& t, const std::vector<double>& y, double pulse_end,
                               double period)
{
    if (t.size() != y.size()) throw std::invalid_argument("revival_contrast: time and value lengths differ");
    if (!(period > 0.0)) throw std::invalid_argument("revival_contrast: revival period must be positive");
    if (t.empty() || t.back() < pulse_end + period * (1.0 - 1e-9))
        throw std::invalid_argument("revival_contrast: trace must extend one revival period beyond the pulse end");

    RevivalReport rep;
    rep.window = {pulse_end, pulse_end + period};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double area = 0.0, span = 0.0;
    std::vector<double> post_t, post_y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < pulse_end) continue;
        post_t.push_back(t[i]);
        post_y.push_back(y[i]);
        if (t[i] <= rep.window.t_end_ps * (1.0 + 1e-12)) {
            lo = std::min(lo, y[i]);
            hi = std::max(hi, y[i]);
            if (post_t.size() >= 2 && post_t[post_t.size() - 2] >= pulse_end) {
                const double dt = post_t.back() - post_t[post_t.size() - 2];
                area += 0.5 * dt * (post_y.back() + post_y[post_y.size() - 2]);
                span += dt;
            }
        }
    }
    rep.contrast = hi - lo;
    rep.mean_level = span > 0.0 ? area / span : post_y.front();

    // autocorrelation on a uniform resampling of the post-pulse data
    rep.period_estimate = std::numeric_limits<double>::quiet_NaN();
    if (post_t.size() < 16) return rep;
    Eigen::VectorXd pt = Eigen::Map<Eigen::VectorXd>(post_t.data(), static_cast<Eigen::Index>(post_t.size()));
    const double dt = median_spacing(pt);
    const auto n = static_cast<int>(std::floor((post_t.back() - post_t.front()) / dt + 1e-9)) + 1;
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double tk = post_t.front() + k * dt;
        const auto it = std::upper_bound(post_t.begin(), post_t.end(), tk);
        const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - post_t.begin(), 1,
                                                                            static_cast<std::ptrdiff_t>(post_t.size()) - 1));
        const double a = (tk - post_t[j - 1]) / (post_t[j] - post_t[j - 1]);
        u[static_cast<std::size_t>(k)] = (1.0 - a) * post_y[j - 1] + a * post_y[j];
    }
    auto pearson = [&u, n](int lag) {
        const int m = n - lag;
        double ma = 0.0, mb = 0.0;
        for (int i = 0; i < m; ++i) { ma += u[i]; mb += u[i + lag]; }
        ma /= m;
        mb /= m;
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (int i = 0; i < m; ++i) {
            const double da = u[i] - ma, db = u[i + lag] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        return (saa > 0.0 && sbb > 0.0) ? sab / std::sqrt(saa * sbb) : std::numeric_limits<double>::quiet_NaN();
    };
    const int lag_lo = std::max(1, static_cast<int>(std::ceil(0.5 * period / dt)));
    const int lag_hi = std::min(static_cast<int>(std::floor(1.5 * period / dt)), n - std::max(8, n / 4));
    if (lag_hi <= lag_lo + 1) return rep;
    int best = -1;
    double best_r = -2.0;
    for (int lag = lag_lo; lag <= lag_hi; ++lag) {
        const double r = pearson(lag);
        if (std::isfinite(r) && r > best_r) { best_r = r; best = lag; }
    }
    if (best < 0) return rep;
    double lag = best;
    if (best > lag_lo && best < lag_hi) {
        const double r0 = pearson(best - 1), r1 = best_r, r2 = pearson(best + 1);
        const double denom = r0 - 2.0 * r1 + r2;
        if (denom < 0.0) lag += 0.5 * (r0 - r2) / denom;
    }
    rep.period_estimate = lag * dt;
    return rep;
}

RevivalReport revival_contrast(const AlignmentTrace& trace, double pulse_end, double period)
{
    return revival_contrast(trace.times_ps, trace.cos2_2d, pulse_end, period);
}

AnalysisWindow plateau_window(const PulseEnvelope& pulse, double period)
{
    const auto w = pulse.above(0.95);
    if (w.empty()) throw std::invalid_argument("plateau_window: envelope never reaches 95% of its peak");
    const double guard = std::min(std::max(0.0, period), 0.25 * (w.end_ps - w.begin_ps));
    return {w.begin_ps + guard, w.end_ps - guard};
}

double gap_frequency(const PendularSpectrum& spectrum, int label_a, int label_b, const ReducedUnits& units)
{
    const int ia = spectrum.index_of_label(label_a), ib = spectrum.index_of_label(label_b);
    if (ia < 0 || ib < 0) throw std::invalid_argument("gap_frequency: label not present in spectrum");
    return units.to_inverse_ps(std::abs(spectrum.energies[ib] - spectrum.energies[ia]) / (2.0 * constants::pi));
}

double compare_beat_to_gap(const std::vector<double>& t, const std::vector<double>& y, AnalysisWindow w,
                           const PendularSpectrum& spectrum, int label_a, int label_b, const ReducedUnits& units)
{
    const double f_gap = gap_frequency(spectrum, label_a, label_b, units);
    const double f = dominant_frequency(t, y, w).dominant_frequency;
    return std::abs(f - f_gap) / f_gap;
}

} // namespace rotalign
