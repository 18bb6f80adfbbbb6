#include "rotalign/ensemble.hpp"
#include "rotalign/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace rotalign;

namespace {

SimulationSetup small_setup(double peak, int j_max = 16)
{
    SimulationSetup s;
    s.pulse = PulseEnvelope(RampPlateauShape{}, peak);
    s.basis = BasisSpec{j_max, 0, Parity::Even};
    s.tracked_states = 3;
    return s;
}

std::vector<double> grid(double a, double b, double step)
{
    std::vector<double> out;
    for (double t = a; t <= b + 1e-9; t += step) out.push_back(t);
    return out;
}

} // namespace

TEST_CASE("focal geometry validation and kappa")
{
    FocalGeometry g;
    CHECK(g.kappa() == doctest::Approx(3.0 * 45.0 * 45.0 / (30.0 * 30.0)));
    g.probe_order = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = FocalGeometry{};
    g.n_bins = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = FocalGeometry{};
    g.w_probe_um = -1.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);

    FocalGeometry a{30.0, 30.0, 1, 8};
    FocalGeometry b{30.0, 30.0, 2, 8};
    CHECK(b.kappa() == doctest::Approx(2.0 * a.kappa()));
}

TEST_CASE("focal weights for kappa = 1 are uniform medians")
{
    const auto d = focal_weights(FocalGeometry{30.0, 30.0, 1, 4});
    REQUIRE(d.fractions.size() == 4);
    const double expect[] = {7.0 / 8, 5.0 / 8, 3.0 / 8, 1.0 / 8};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(d.fractions[i] == doctest::Approx(expect[i]));
        CHECK(d.weights[i] == doctest::Approx(0.25));
    }
}

TEST_CASE("focal weights follow the detected intensity distribution")
{
    // Monte Carlo over the probe focus: radius drawn with weight I_probe^n, fraction = I_align / peak
    const FocalGeometry g{45.0, 30.0, 3, 32};
    std::mt19937_64 rng(7);
    std::exponential_distribution<double> r2(2.0 * g.probe_order / (g.w_probe_um * g.w_probe_um));
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = std::exp(-2.0 * r2(rng) / (g.w_align_um * g.w_align_um));
        sum += f;
        sum2 += f * f;
    }
    const double mc_mean = sum / n;
    const double mc_err = std::sqrt((sum2 / n - mc_mean * mc_mean) / n);
    const double kappa = g.kappa();
    CHECK(std::abs(mc_mean - kappa / (kappa + 1.0)) < 4.0 * mc_err);

    const auto d = focal_weights(g);
    double w = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < d.fractions.size(); ++i) {
        w += d.weights[i];
        mean += d.weights[i] * d.fractions[i];
        if (i > 0) CHECK(d.fractions[i] < d.fractions[i - 1]);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean == doctest::Approx(mc_mean).epsilon(2e-3));
}

TEST_CASE("very large kappa collapses to the peak intensity")
{
    const auto d = focal_weights(FocalGeometry{1e6, 1.0, 1, 8});
    REQUIRE(!d.fractions.empty());
    CHECK(d.fractions.back() > 0.999999);
    CHECK(std::accumulate(d.weights.begin(), d.weights.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("volume average")
{
    AlignmentTrace a, b;
    a.times_ps = b.times_ps = {0.0, 1.0, 2.0};
    a.cos2_3d = {0.3, 0.4, 0.5};
    a.cos2_2d = {0.5, 0.6, 0.7};
    b.cos2_3d = {0.5, 0.2, 0.1};
    b.cos2_2d = {0.7, 0.4, 0.3};
    a.delta_omega = b.delta_omega = {1.0, 1.0, 1.0};

    const auto single = volume_average({a}, IntensityDistribution{{1.0}, {1.0}});
    CHECK(single.cos2_2d == a.cos2_2d);

    const auto same = volume_average({a, a}, IntensityDistribution{{1.0, 0.5}, {0.3, 0.7}});
    for (std::size_t i = 0; i < 3; ++i) CHECK(same.cos2_2d[i] == doctest::Approx(a.cos2_2d[i]).epsilon(1e-14));

    const auto mix = volume_average({a, b}, IntensityDistribution{{1.0, 0.5}, {0.25, 0.75}});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(mix.cos2_2d[i] == doctest::Approx(0.25 * a.cos2_2d[i] + 0.75 * b.cos2_2d[i]));
        CHECK(mix.cos2_3d[i] == doctest::Approx(0.25 * a.cos2_3d[i] + 0.75 * b.cos2_3d[i]));
    }

    AlignmentTrace c = b;
    c.times_ps = {0.0, 1.0, 2.5};
    CHECK_THROWS_AS(volume_average({a, c}, IntensityDistribution{{1.0, 0.5}, {0.5, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(volume_average({a}, IntensityDistribution{{1.0, 0.5}, {0.5, 0.5}}), std::invalid_argument);
}

TEST_CASE("start time covers the pulse support")
{
    const auto s = small_setup(1e10);
    const auto sup = s.pulse.support(s.propagation.handoff_threshold);
    CHECK(s.start_time(100.0) == doctest::Approx(sup.begin_ps));
    CHECK(s.start_time(-500.0) == -500.0);
}

TEST_CASE("zero intensity gives the isotropic detector-plane level")
{
    const auto s = small_setup(0.0);
    FocalGeometry g;
    g.n_bins = 3;
    const auto tr = run_delay_scan(s, g, grid(-5.0, 60.0, 5.0));
    for (double v : tr.cos2_2d) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    for (double v : tr.cos2_3d) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("focal averaging reduces alignment")
{
    const auto s = small_setup(1e11);
    const auto delays = grid(20.0, 40.0, 2.0);
    const auto peak = run_single(s, delays);
    FocalGeometry g;
    g.n_bins = 4;
    const auto avg = run_delay_scan(s, g, delays);
    double mean_peak = 0.0, mean_avg = 0.0;
    for (std::size_t i = 0; i < delays.size(); ++i) {
        mean_peak += peak.cos2_2d[i];
        mean_avg += avg.cos2_2d[i];
        CHECK(avg.cos2_2d[i] > 0.5);
    }
    CHECK(mean_avg < mean_peak);
}

TEST_CASE("intensity scan is deterministic across thread counts")
{
    const auto s = small_setup(1e10);
    const std::vector<double> intens{0.0, 2e10, 5e10};
    const auto delays = grid(0.0, 60.0, 1.0);
    FocalGeometry g;
    g.n_bins = 2;
    const auto one = run_intensity_scan(s, g, intens, delays, 1);
    const auto two = run_intensity_scan(s, g, intens, delays, 3);
    REQUIRE(one.cos2_2d.size() == 3);
    CHECK(one.cos2_2d == two.cos2_2d);
    CHECK(one.intensities == intens);
    CHECK(one.delays_ps == delays);
    for (bool ok : one.row_ok) CHECK(ok);
    CHECK(one.cos2_2d[2][30] > one.cos2_2d[1][30]);
    CHECK(one.cos2_2d[1][30] > one.cos2_2d[0][30]);
}

TEST_CASE("failed rows are flagged and the scan continues")
{
    auto s = small_setup(1e10, 8);
    s.propagation.auto_extend_basis = false;
    const auto delays = grid(0.0, 20.0, 2.0);
    const auto res = run_intensity_scan(s, std::nullopt, {1e9, 1e13, 2e9}, delays, 2);
    REQUIRE(res.row_ok.size() == 3);
    CHECK(res.row_ok[0]);
    CHECK_FALSE(res.row_ok[1]);
    CHECK(res.row_ok[2]);
    CHECK_FALSE(res.row_error[1].empty());
    for (double v : res.cos2_2d[1]) CHECK(std::isnan(v));
    for (double v : res.cos2_2d[2]) CHECK(std::isfinite(v));
}

TEST_CASE("parallel_for runs every job once and reports errors")
{
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS(parallel_for(5, 2, [](std::size_t i) {
        if (i == 3) throw std::runtime_error("job failed");
    }));
    CHECK(default_thread_count() >= 1);
}

TEST_CASE("post-pulse trace spans one revival period")
{
    const auto s = small_setup(1e10);
    const auto tr = post_pulse_trace(s, 5e10, 200);
    CHECK(tr.times_ps.size() == 201);
    CHECK(tr.revival_period_ps == doctest::Approx(82.2).epsilon(1e-3));
    CHECK(tr.times_ps.front() == doctest::Approx(tr.pulse_end_ps));
    CHECK(tr.times_ps.back() - tr.times_ps.front() <= tr.revival_period_ps + 1e-9);
    for (double v : tr.cos2_2d) CHECK((v > 0.3 && v < 0.8));
}

TEST_CASE("map structure on a synthetic scan")
{
    ScanResult scan;
    scan.delays_ps = grid(0.0, 200.0, 0.25);
    const double rev = 80.0, end = 100.0;
    const std::vector<double> freq{0.05, 0.07, 0.09, 0.11, 0.13};
    const std::vector<double> revival{0.2, 0.25, 0.01, 0.22, 0.3};
    for (std::size_t r = 0; r < freq.size(); ++r) {
        std::vector<double> row;
        for (double t : scan.delays_ps) {
            const double pi = 3.14159265358979323846;
            row.push_back(t < end ? 0.7 + 0.05 * std::cos(2.0 * pi * freq[r] * t)
                                  : 0.5 + 0.5 * revival[r] * std::cos(2.0 * pi * t / 20.0));
        }
        scan.intensities.push_back(1e10 * static_cast<double>(r + 1));
        scan.cos2_2d.push_back(row);
        scan.row_ok.push_back(true);
        scan.row_error.emplace_back();
    }
    const auto m = analyze_map(scan, AnalysisWindow{10.0, 90.0}, end, rev);
    for (std::size_t r = 0; r < freq.size(); ++r) {
        CHECK(m.plateau_frequency[r] == doctest::Approx(freq[r]).epsilon(1e-3));
        CHECK(m.oscillation_count[r] == doctest::Approx(freq[r] * 80.0).epsilon(1e-3));
    }
    CHECK(m.counts_non_decreasing);
    REQUIRE(m.suppression_rows.size() == 1);
    CHECK(m.suppression_rows[0] == 2);
}
