#include "rotalign/ensemble.hpp"

#include "rotalign/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace rotalign {

void FocalGeometry::validate() const
{
    if (!(w_align_um > 0.0) || !(w_probe_um > 0.0)) throw ConfigError("focal: beam waists must be positive");
    if (probe_order < 1) throw ConfigError("focal: probe order must be >= 1");
    if (n_bins < 2) throw ConfigError("focal: at least two intensity bins are required");
}

double FocalGeometry::kappa() const
{
    return probe_order * (w_align_um * w_align_um) / (w_probe_um * w_probe_um);
}

IntensityDistribution focal_weights(const FocalGeometry& geom)
{
    geom.validate();
    const double kappa = geom.kappa();
    const int n = geom.n_bins;
    IntensityDistribution d;
    // CDF of the fraction is f^kappa; bin i spans quantiles [(i-1)/n, i/n]
    for (int i = n; i >= 1; --i) {
        const double q = (2.0 * i - 1.0) / (2.0 * n);
        const double f = std::pow(q, 1.0 / kappa);
        if (!d.fractions.empty() && d.fractions.back() == f) {
            d.weights.back() += 1.0 / n;
        } else {
            d.fractions.push_back(f);
            d.weights.push_back(1.0 / n);
        }
    }
    return d;
}

AlignmentTrace volume_average(const std::vector<AlignmentTrace>& traces, const IntensityDistribution& dist)
{
    if (traces.empty() || traces.size() != dist.weights.size())
        throw std::invalid_argument("volume_average: need one trace per intensity bin");
    const auto& ref = traces.front();
    for (const auto& tr : traces) {
        if (tr.times_ps != ref.times_ps)
            throw std::invalid_argument("volume_average: traces do not share a time grid");
        if (tr.cos2_2d.size() != ref.size() || tr.cos2_3d.size() != ref.size())
            throw std::invalid_argument("volume_average: trace lengths differ");
    }
    AlignmentTrace out = ref;
    const bool weights_ok = std::all_of(traces.begin(), traces.end(), [&ref](const AlignmentTrace& tr) {
        return tr.tracked_labels == ref.tracked_labels && tr.pendular_weights.rows() == ref.pendular_weights.rows();
    });
    // mean written as ref + sum w (x - ref) so that identical traces are reproduced exactly
    for (std::size_t k = 1; k < traces.size(); ++k) {
        const double w = dist.weights[k];
        const auto& tr = traces[k];
        for (std::size_t i = 0; i < ref.size(); ++i) {
            out.cos2_2d[i] += w * (tr.cos2_2d[i] - ref.cos2_2d[i]);
            out.cos2_3d[i] += w * (tr.cos2_3d[i] - ref.cos2_3d[i]);
            if (!ref.delta_omega.empty() && tr.delta_omega.size() == ref.delta_omega.size())
                out.delta_omega[i] += w * (tr.delta_omega[i] - ref.delta_omega[i]);
        }
        if (weights_ok) out.pendular_weights += w * (tr.pendular_weights - ref.pendular_weights);
    }
    if (!weights_ok) {
        out.tracked_labels.clear();
        out.pendular_weights.resize(0, 0);
    }
    return out;
}

double SimulationSetup::start_time(double t_first) const
{
    const auto support = pulse.support(propagation.handoff_threshold);
    return support.empty() ? t_first : std::min(t_first, support.begin_ps);
}

int default_thread_count()
{
    if (const char* env = std::getenv("ROTALIGN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job)
{
    const auto workers = static_cast<std::size_t>(std::clamp<long long>(threads, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

void check_delays(const std::vector<double>& delays)
{
    if (delays.empty()) throw ConfigError("delay grid is empty");
    for (std::size_t i = 1; i < delays.size(); ++i)
        if (!(delays[i] > delays[i - 1])) throw ConfigError("delay grid must be strictly increasing");
}

AlignmentTrace trace_for_peak(const SimulationSetup& setup, double peak, const std::vector<double>& delays)
{
    const auto pulse = setup.pulse.with_peak(peak);
    SimulationSetup s = setup;
    s.pulse = pulse;
    const auto initial = WavePacket::basis_state(setup.basis, setup.initial_j);
    const auto record = propagate_to_times(initial, setup.molecule, pulse, s.start_time(delays.front()), delays,
                                           setup.propagation);
    return build_trace(record, setup.detection, setup.tracked_states);
}

} // namespace

AlignmentTrace run_single(const SimulationSetup& setup, const std::vector<double>& delays)
{
    check_delays(delays);
    return trace_for_peak(setup, setup.pulse.peak_intensity(), delays);
}

AlignmentTrace run_delay_scan(const SimulationSetup& setup, const std::optional<FocalGeometry>& geom,
                              const std::vector<double>& delays, int threads)
{
    check_delays(delays);
    if (!geom) return run_single(setup, delays);
    const auto dist = focal_weights(*geom);
    std::vector<AlignmentTrace> traces(dist.fractions.size());
    parallel_for(traces.size(), threads, [&](std::size_t b) {
        try {
            traces[b] = trace_for_peak(setup, setup.pulse.peak_intensity() * dist.fractions[b], delays);
        } catch (const TruncationError& e) {
            throw TruncationError("focal bin " + std::to_string(b) + ": " + e.what(), e.j_max(), e.boundary_population());
        } catch (const NumericalError& e) {
            throw NumericalError("focal bin " + std::to_string(b) + ": " + e.what());
        }
    });
    return volume_average(traces, dist);
}

ScanResult run_intensity_scan(const SimulationSetup& setup, const std::optional<FocalGeometry>& geom,
                              const std::vector<double>& intensities, const std::vector<double>& delays, int threads)
{
    if (intensities.empty()) throw ConfigError("intensity grid is empty");
    check_delays(delays);
    for (double i : intensities)
        if (!(i >= 0.0)) throw ConfigError("intensities must be nonnegative");

    IntensityDistribution dist{{1.0}, {1.0}};
    if (geom) dist = focal_weights(*geom);
    const std::size_t n_bins = dist.fractions.size();
    const std::size_t n_rows = intensities.size();

    std::vector<AlignmentTrace> traces(n_rows * n_bins);
    std::vector<std::string> errors(n_rows * n_bins);
    parallel_for(traces.size(), threads, [&](std::size_t job) {
        const std::size_t row = job / n_bins, bin = job % n_bins;
        try {
            traces[job] = trace_for_peak(setup, intensities[row] * dist.fractions[bin], delays);
        } catch (const std::exception& e) {
            errors[job] = "bin " + std::to_string(bin) + ": " + e.what();
        }
    });

    ScanResult res;
    res.delays_ps = delays;
    res.intensities = intensities;
    res.cos2_2d.assign(n_rows, std::vector<double>(delays.size(), std::numeric_limits<double>::quiet_NaN()));
    res.row_ok.assign(n_rows, true);
    res.row_error.assign(n_rows, "");
    for (std::size_t row = 0; row < n_rows; ++row) {
        for (std::size_t bin = 0; bin < n_bins; ++bin)
            if (!errors[row * n_bins + bin].empty()) {
                res.row_ok[row] = false;
                res.row_error[row] = errors[row * n_bins + bin];
                break;
            }
        if (!res.row_ok[row]) continue;
        std::vector<AlignmentTrace> row_traces(traces.begin() + static_cast<std::ptrdiff_t>(row * n_bins),
                                               traces.begin() + static_cast<std::ptrdiff_t>((row + 1) * n_bins));
        res.cos2_2d[row] = volume_average(row_traces, dist).cos2_2d;
    }
    std::ostringstream kappa;
    kappa << (geom ? geom->kappa() : std::numeric_limits<double>::infinity());
    res.metadata.emplace_back("volume_average", geom ? "focal" : "none");
    res.metadata.emplace_back("kappa", kappa.str());
    res.metadata.emplace_back("focal_bins", std::to_string(n_bins));
    return res;
}

PostPulseTrace post_pulse_trace(const SimulationSetup& setup, double peak, int samples)
{
    const auto pulse = setup.pulse.with_peak(peak);
    const auto units = ReducedUnits::for_molecule(setup.molecule);
    PostPulseTrace out;
    out.revival_period_ps = units.revival_period_ps();
    const auto support = setup.pulse.support(setup.propagation.handoff_threshold);
    out.pulse_end_ps = support.empty() ? 0.0 : support.end_ps;

    auto initial = WavePacket::basis_state(setup.basis, setup.initial_j);
    SimulationSetup s = setup;
    s.pulse = pulse;
    const double t0 = s.start_time(out.pulse_end_ps);
    const auto rec = propagate_to_times(initial, setup.molecule, pulse, t0, {out.pulse_end_ps}, setup.propagation);
    const auto& last = rec.packets.back();
    const AlignmentEvaluator eval(last.basis, setup.detection);
    for (int k = 0; k <= samples; ++k) {
        const double t = out.pulse_end_ps + out.revival_period_ps * k / samples;
        out.times_ps.push_back(t);
        out.cos2_2d.push_back(eval.cos2_2d(evolve_field_free(last, units.to_reduced_time(t - out.pulse_end_ps))));
    }
    return out;
}

SwitchOffSearch find_switch_off(const SimulationSetup& setup, const std::vector<double>& intensities, int threads)
{
    if (intensities.size() < 3) throw ConfigError("switch-off search needs at least three intensities");
    SwitchOffSearch res;
    res.intensities = intensities;
    res.contrast.resize(intensities.size());
    res.mean_level.resize(intensities.size());
    auto evaluate = [&setup](double intensity) {
        const auto post = post_pulse_trace(setup, intensity);
        return revival_contrast(post.times_ps, post.cos2_2d, post.pulse_end_ps, post.revival_period_ps);
    };
    parallel_for(intensities.size(), threads, [&](std::size_t i) {
        const auto rep = evaluate(intensities[i]);
        res.contrast[i] = rep.contrast;
        res.mean_level[i] = rep.mean_level;
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < intensities.size(); ++i) {
        if (res.contrast[i] < res.contrast[i - 1] && res.contrast[i] <= res.contrast[i + 1]) {
            if (!res.interior_minimum || res.contrast[i] < res.contrast[best]) best = i;
            res.interior_minimum = true;
        }
    }
    if (!res.interior_minimum) return res;
    const double lo = intensities[best - 1], hi = intensities[best + 1];
    const double scale = intensities[best];
    const auto [x, c] = boost::math::tools::brent_find_minima(
        [&](double u) { return evaluate(u * scale).contrast; }, lo / scale, hi / scale, 30);
    const auto rep = evaluate(x * scale);
    if (rep.contrast <= res.contrast[best]) {
        res.minimizing_intensity = x * scale;
        res.minimum_contrast = rep.contrast;
        res.minimum_mean_level = rep.mean_level;
    } else {
        res.minimizing_intensity = intensities[best];
        res.minimum_contrast = res.contrast[best];
        res.minimum_mean_level = res.mean_level[best];
    }
    (void)c;
    return res;
}

MapStructure analyze_map(const ScanResult& scan, AnalysisWindow plateau, double pulse_end_ps, double revival_period_ps,
                         double suppression_fraction)
{
    MapStructure m;
    m.plateau = plateau;
    m.pulse_end_ps = pulse_end_ps;
    m.revival_period_ps = revival_period_ps;
    const std::size_t n = scan.intensities.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.plateau_frequency.assign(n, nan);
    m.oscillation_count.assign(n, nan);
    m.post_contrast.assign(n, nan);
    for (std::size_t r = 0; r < n; ++r) {
        if (!scan.row_ok[r]) continue;
        const auto osc = dominant_frequency(scan.delays_ps, scan.cos2_2d[r], plateau);
        m.plateau_frequency[r] = osc.single_frequency;
        m.oscillation_count[r] = osc.single_frequency * plateau.length();
        m.post_contrast[r] = revival_contrast(scan.delays_ps, scan.cos2_2d[r], pulse_end_ps, revival_period_ps).contrast;
    }
    m.counts_non_decreasing = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (double c : m.oscillation_count) {
        if (std::isnan(c)) continue;
        if (c < prev) m.counts_non_decreasing = false;
        prev = c;
    }
    std::vector<double> finite;
    for (double c : m.post_contrast)
        if (std::isfinite(c)) finite.push_back(c);
    if (finite.size() < 3) return m;
    std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(finite.size() / 2), finite.end());
    const double median = finite[finite.size() / 2];
    for (std::size_t r = 1; r + 1 < n; ++r) {
        const double c = m.post_contrast[r];
        if (!std::isfinite(c)) continue;
        const double lo = m.post_contrast[r - 1], hi = m.post_contrast[r + 1];
        if (c <= lo && c <= hi && c < suppression_fraction * median) m.suppression_rows.push_back(r);
    }
    return m;
}

} // namespace rotalign
