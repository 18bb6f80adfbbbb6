#include "oracles.hpp"

#include "rotalign/analysis.hpp"
#include "rotalign/ensemble.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace rotalign;

namespace {

std::vector<double> grid(double a, double b, double step)
{
    std::vector<double> out;
    const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int k = 0; k <= n; ++k) out.push_back(a + k * step);
    return out;
}

std::vector<double> sample(const std::vector<double>& t, const std::function<double(double)>& f)
{
    std::vector<double> y;
    for (double x : t) y.push_back(f(x));
    return y;
}

} // namespace

TEST_CASE("single sinusoid with trend")
{
    const auto t = grid(0.0, 200.0, 0.2);
    const auto y = sample(t, [](double x) { return 0.6 + 1e-4 * x + 0.08 * std::cos(2 * oracle::pi * 0.05 * x + 0.4); });
    const auto r = dominant_frequency(t, y, {0.0, 200.0});
    CHECK(r.dominant_frequency == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(r.single_frequency == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(r.amplitude == doctest::Approx(0.08).epsilon(1e-5));
    CHECK(r.samples == static_cast<int>(t.size()));
    CHECK_FALSE(r.tie_broken);
}

TEST_CASE("noisy sinusoid")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.01);
    const auto t = grid(0.0, 100.0, 0.1);
    const auto y = sample(t, [&](double x) { return 0.5 + 0.05 * std::sin(2 * oracle::pi * 0.123 * x) + noise(rng); });
    CHECK(dominant_frequency(t, y, {0.0, 100.0}).dominant_frequency == doctest::Approx(0.123).epsilon(2e-3));
}

TEST_CASE("window restricts the samples")
{
    const auto t = grid(0.0, 100.0, 0.1);
    const auto y = sample(t, [](double x) {
        return x < 50.0 ? std::cos(2 * oracle::pi * 0.2 * x) : std::cos(2 * oracle::pi * 0.6 * x);
    });
    CHECK(dominant_frequency(t, y, {0.0, 49.9}).dominant_frequency == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(dominant_frequency(t, y, {50.0, 100.0}).dominant_frequency == doctest::Approx(0.6).epsilon(1e-5));
}

TEST_CASE("constant and linear traces have no oscillation")
{
    const auto t = grid(0.0, 50.0, 0.5);
    const auto flat = dominant_frequency(t, std::vector<double>(t.size(), 0.5), {0.0, 50.0});
    CHECK(flat.dominant_frequency == 0.0);
    CHECK(flat.amplitude == 0.0);
    CHECK(flat.mean_level == doctest::Approx(0.5));
    const auto line = dominant_frequency(t, sample(t, [](double x) { return 0.3 + 0.002 * x; }), {0.0, 50.0});
    CHECK(line.amplitude < 1e-10);
}

TEST_CASE("input errors")
{
    const std::vector<double> t{0.0, 1.0, 2.0};
    CHECK_THROWS_AS(dominant_frequency(t, std::vector<double>{1.0, 2.0}, {0.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(dominant_frequency(t, std::vector<double>{1.0, 2.0, 3.0}, {0.5, 0.9}), std::invalid_argument);
    CHECK_THROWS_AS(dominant_frequency(t, std::vector<double>{1.0, 2.0, 3.0}, {1.5, 2.0}), std::invalid_argument);
}

TEST_CASE("two resolved beats")
{
    const auto t = grid(0.0, 150.0, 0.1);
    const auto y = sample(t, [](double x) {
        return 0.5 + 0.1 * std::cos(2 * oracle::pi * 0.25 * x) + 0.04 * std::cos(2 * oracle::pi * 0.41 * x + 1.0);
    });
    const auto r = dominant_frequency(t, y, {0.0, 150.0});
    CHECK(r.dominant_frequency == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(r.amplitude == doctest::Approx(0.1).epsilon(1e-4));
    CHECK(r.secondary_frequency == doctest::Approx(0.41).epsilon(1e-4));
    CHECK(r.secondary_amplitude == doctest::Approx(0.04).epsilon(1e-3));

    const auto comps = spectral_components(t, y, {0.0, 150.0}, 2);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].dominant_frequency == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(comps[1].dominant_frequency == doctest::Approx(0.41).epsilon(1e-3));
}

TEST_CASE("periodogram peaks at the signal frequency")
{
    const auto t = grid(0.0, 80.0, 0.25);
    const auto y = sample(t, [](double x) { return std::sin(2 * oracle::pi * 0.3 * x); });
    const auto s = periodogram(t, y, {0.0, 80.0});
    REQUIRE(s.frequency.size() == s.power.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.power.size(); ++i)
        if (s.power[i] > s.power[best]) best = i;
    CHECK(std::abs(s.frequency[best] - 0.3) <= s.frequency[1] - s.frequency[0]);
    CHECK(s.frequency.front() > 0.0);
    CHECK(s.frequency.back() <= 2.0 + 1e-9);
}

TEST_CASE("synthetic two-state beat recovers the pendular gap")
{
    const MoleculeSpec ocs{};
    const auto units = ReducedUnits::for_molecule(ocs);
    const double dw = reduced_coupling(ocs, 6e11);
    const auto spec = eigensolve_pendular(BasisSpec{40, 0, Parity::Even}, dw);
    const int i0 = spec.index_of_label(0), i2 = spec.index_of_label(2);
    const double e0 = spec.energies[i0], e2 = spec.energies[i2];
    const double f_gap = gap_frequency(spec, 0, 2, units);

    // |psi> = a|0~> + b|2~>, <cos^2> beats at (E2 - E0) / (2 pi)
    const double a = std::sqrt(0.9), b = std::sqrt(0.1);
    const double c02 = spec.eigenvectors.col(i0).dot(CosSqOperator::build(spec.basis).dense() * spec.eigenvectors.col(i2));
    const auto t = grid(10.0, 50.0, 0.1);
    const auto y = sample(t, [&](double x) {
        const double tau = units.to_reduced_time(x);
        return a * a * spec.cos2[i0] + b * b * spec.cos2[i2] + 2 * a * b * c02 * std::cos((e2 - e0) * tau);
    });
    CHECK(std::abs(dominant_frequency(t, y, {10.0, 50.0}).dominant_frequency - f_gap) / f_gap <= 1e-3);
}

TEST_CASE("plateau beat at 6e11 W/cm^2 matches the 0-2 pendular gap")
{
    SimulationSetup s;
    s.pulse = PulseEnvelope(RampPlateauShape{}, 6e11);
    s.basis = BasisSpec{40, 0, Parity::Even};
    s.tracked_states = 0;
    const auto trace = run_single(s, grid(-10.0, 80.0, 0.1));
    const auto units = ReducedUnits::for_molecule(s.molecule);
    const auto spec = eigensolve_pendular(s.basis, reduced_coupling(s.molecule, 6e11));
    const double gap02 = gap_frequency(spec, 0, 2, units), gap24 = gap_frequency(spec, 2, 4, units);
    const auto window = plateau_window(s.pulse, 1.0 / gap02);
    const double err = compare_beat_to_gap(trace.times_ps, trace.cos2_2d, window, spec, 0, 2, units);
    CHECK(err <= 0.02);
    const auto r = dominant_frequency(trace, window);
    CHECK(r.secondary_frequency == doctest::Approx(gap24).epsilon(0.05));
}

TEST_CASE("revival contrast")
{
    const double period = 82.2;
    const auto t = grid(0.0, 200.0, 0.05);
    const auto y = sample(t, [&](double x) {
        return x < 50.0 ? 0.7 : 0.5 + 0.1 * std::cos(2 * oracle::pi * x / 80.0);
    });
    const auto r = revival_contrast(t, y, 50.0, period);
    CHECK(r.contrast == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(r.mean_level == doctest::Approx(0.5).epsilon(5e-3));
    CHECK(r.period_estimate == doctest::Approx(80.0).epsilon(0.01));
    CHECK(r.window.t_start_ps == 50.0);

    CHECK_THROWS_AS(revival_contrast(t, y, 150.0, period), std::invalid_argument);
    CHECK_THROWS_AS(revival_contrast(t, y, 50.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(revival_contrast(t, std::vector<double>(3, 0.0), 50.0, period), std::invalid_argument);

    const auto flat = revival_contrast(t, std::vector<double>(t.size(), 0.5), 50.0, period);
    CHECK(flat.contrast == 0.0);
}

TEST_CASE("plateau window")
{
    const PulseEnvelope p(RampPlateauShape{10.0, 40.0, 10.0, 0.0}, 1e11);
    const auto full = p.above(0.95);
    const auto w0 = plateau_window(p, 0.0);
    CHECK(w0.t_start_ps == doctest::Approx(full.begin_ps));
    CHECK(w0.t_end_ps == doctest::Approx(full.end_ps));
    const auto w = plateau_window(p, 4.0);
    CHECK(w.t_start_ps == doctest::Approx(full.begin_ps + 4.0));
    CHECK(w.t_end_ps == doctest::Approx(full.end_ps - 4.0));
    const auto capped = plateau_window(p, 1e3);
    CHECK(capped.length() == doctest::Approx(0.5 * (full.end_ps - full.begin_ps)));
    CHECK_THROWS_AS(gap_frequency(eigensolve_pendular(BasisSpec{4, 0, Parity::Even}, 1.0), 0, 40,
                                  ReducedUnits::for_molecule(MoleculeSpec{})),
                    std::invalid_argument);
}
