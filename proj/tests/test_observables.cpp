#include "oracles.hpp"

#include "rotalign/errors.hpp"
#include "rotalign/observables.hpp"

#include <doctest.h>

#include <random>

using namespace rotalign;
using cd = std::complex<double>;

namespace {

WavePacket superposition(const BasisSpec& b, std::vector<std::pair<int, cd>> terms)
{
    WavePacket p = WavePacket::basis_state(b, terms.front().first);
    p.amplitudes.setZero();
    for (auto [j, c] : terms) p.amplitudes[b.index_of(j)] = c;
    p.amplitudes.normalize();
    return p;
}

struct MonteCarloProjection {
    double plain = 0.0;
    double selective_y = 0.0;
    double selective_x = 0.0;
};

// Uniform directions weighted by |Y20|^2; axis projected onto the (X, Y) detector plane.
MonteCarloProjection monte_carlo_y20(std::size_t n, int selectivity)
{
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    double sw = 0, swf = 0, swy = 0, swfy = 0, swx = 0, swfx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = g(rng), y = g(rng), z = g(rng);
        const double r = std::sqrt(x * x + y * y + z * z);
        x /= r;
        y /= r;
        z /= r;
        const double yv = oracle::ylm(2, 0, std::acos(y));
        const double w = yv * yv;
        const double f = y * y / (x * x + y * y);
        const double wy = w * std::pow(y * y, selectivity), wx = w * std::pow(x * x, selectivity);
        sw += w;
        swf += w * f;
        swy += wy;
        swfy += wy * f;
        swx += wx;
        swfx += wx * f;
    }
    return {swf / sw, swfy / swy, swfx / swx};
}

} // namespace

TEST_CASE("isotropic baselines")
{
    const BasisSpec b{20, 0, Parity::Even};
    const auto p = WavePacket::basis_state(b, 0);
    CHECK(expectation_cos2_3d(p) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(expectation_cos2_2d(p, DetectionModel{}) == doctest::Approx(0.5).epsilon(1e-13));
    DetectionModel blur;
    blur.recoil = RecoilModel::AxialWithBlur;
    blur.blur_rad = 0.3;
    CHECK(expectation_cos2_2d(p, blur) == doctest::Approx(0.5).epsilon(1e-10));
    DetectionModel probe_x;
    probe_x.selectivity_exponent = 2;
    probe_x.probe_axis = ProbeAxis::X;
    CHECK(expectation_cos2_2d(p, probe_x) < 0.5);
}

TEST_CASE("3D alignment of simple states")
{
    const BasisSpec odd{9, 0, Parity::Odd};
    CHECK(expectation_cos2_3d(WavePacket::basis_state(odd, 1)) == doctest::Approx(0.6).epsilon(1e-14));

    const BasisSpec b{10, 0, Parity::Even};
    const auto p = superposition(b, {{0, 1.0}, {2, 1.0}});
    const double formula = 0.5 * (1.0 / 3.0 + oracle::cos2_element(2, 2, 0)) + oracle::cos2_element(0, 2, 0);
    CHECK(expectation_cos2_3d(p) == doctest::Approx(formula).epsilon(1e-12));
    const double direct = oracle::sphere_integral([](double x) {
        const double th = std::acos(x);
        const double psi = (oracle::ylm(0, 0, th) + oracle::ylm(2, 0, th)) / std::sqrt(2.0);
        return psi * psi * x * x;
    });
    CHECK(expectation_cos2_3d(p) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("strongly aligned state approaches unit 2D alignment")
{
    const BasisSpec b{400, 0, Parity::Even};
    const auto s = eigensolve_pendular(b, 1e5);
    WavePacket p = WavePacket::basis_state(b, 0);
    p.amplitudes = s.eigenvectors.col(0).cast<cd>();
    CHECK(expectation_cos2_2d(p, DetectionModel{}) > 0.995);
    CHECK(expectation_cos2_3d(p) > 0.99);
}

TEST_CASE("detector-plane alignment of |2,0> against Monte Carlo geometry")
{
    const BasisSpec b{10, 0, Parity::Even};
    const auto p = WavePacket::basis_state(b, 2);
    const auto mc = monte_carlo_y20(20'000'000, 1);
    CHECK(std::abs(expectation_cos2_2d(p, DetectionModel{}) - mc.plain) <= 1e-3);

    DetectionModel sel_y;
    sel_y.selectivity_exponent = 1;
    CHECK(std::abs(expectation_cos2_2d(p, sel_y) - mc.selective_y) <= 1e-3);

    DetectionModel sel_x = sel_y;
    sel_x.probe_axis = ProbeAxis::X;
    CHECK(std::abs(expectation_cos2_2d(p, sel_x) - mc.selective_x) <= 1e-3);
}

TEST_CASE("blur limits")
{
    const BasisSpec b{30, 0, Parity::Even};
    const auto p = superposition(b, {{0, 0.5}, {2, cd(0.3, 0.4)}, {4, 0.6}, {6, cd(0.0, -0.2)}});
    const double sharp = expectation_cos2_2d(p, DetectionModel{});
    DetectionModel tiny;
    tiny.recoil = RecoilModel::AxialWithBlur;
    tiny.blur_rad = 1e-5;
    CHECK(std::abs(expectation_cos2_2d(p, tiny) - sharp) <= 1e-6);
    DetectionModel wide = tiny;
    wide.blur_rad = 10.0;
    CHECK(std::abs(expectation_cos2_2d(p, wide) - 0.5) <= 1e-6);
    DetectionModel mid = tiny;
    mid.blur_rad = 0.4;
    const double v = expectation_cos2_2d(p, mid);
    CHECK(std::abs(v - 0.5) < std::abs(sharp - 0.5));
}

TEST_CASE("closed form and general path agree without blur or selectivity")
{
    const BasisSpec b{30, 0, Parity::Even};
    const auto p = superposition(b, {{0, 0.4}, {2, cd(0.1, 0.7)}, {8, 0.3}, {14, cd(-0.2, 0.2)}});
    DetectionModel general;
    general.recoil = RecoilModel::AxialWithBlur;
    general.blur_rad = 0.0;
    general.selectivity_exponent = 0.0;
    general.probe_axis = ProbeAxis::X;   // forces the general path; n = 0 makes the axis irrelevant
    CHECK(expectation_cos2_2d(p, general) == doctest::Approx(expectation_cos2_2d(p, DetectionModel{})).epsilon(1e-10));
}

TEST_CASE("observable errors")
{
    const BasisSpec b{10, 0, Parity::Even};
    auto p = WavePacket::basis_state(b, 0);
    p.amplitudes *= 1.1;
    CHECK_THROWS_AS(expectation_cos2_2d(p, DetectionModel{}), std::domain_error);
    DetectionModel bad;
    bad.blur_rad = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    const AlignmentEvaluator eval(b, DetectionModel{});
    CHECK_THROWS_AS(eval.cos2_2d(WavePacket::basis_state(BasisSpec{12, 0, Parity::Even}, 0)), std::invalid_argument);
}

TEST_CASE("pendular weights")
{
    const BasisSpec b{20, 0, Parity::Even};
    const auto free = eigensolve_pendular(b, 0.0);
    const auto w = pendular_weights(WavePacket::basis_state(b, 0), free, 4);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] == 0.0);
    const auto strong = eigensolve_pendular(b, 80.0);
    const auto p = superposition(b, {{0, 0.3}, {2, cd(0.1, 0.7)}, {4, 0.5}});
    const auto all = pendular_weights(p, strong, strong.size());
    double sum = 0.0;
    for (double x : all) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(pendular_weights(WavePacket::basis_state(BasisSpec{10, 0, Parity::Even}, 0), strong, 2),
                    std::invalid_argument);
}

TEST_CASE("angular density")
{
    const BasisSpec b{20, 0, Parity::Even};
    std::vector<double> theta;
    for (int k = 0; k <= 50; ++k) theta.push_back(oracle::pi * k / 50);
    const auto rho0 = angular_density(WavePacket::basis_state(b, 0), theta);
    for (std::size_t k = 0; k < theta.size(); ++k) CHECK(rho0[k] == doctest::Approx(std::sin(theta[k]) / 2).scale(1.0).epsilon(1e-14));

    const auto p = superposition(b, {{0, 0.3}, {2, cd(0.1, 0.7)}, {4, 0.5}, {10, cd(0, 0.2)}});
    auto rho = [&p](double th) { return angular_density(p, {th})[0]; };
    const double norm = boost::math::quadrature::gauss<double, 50>::integrate(rho, 0.0, oracle::pi);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    const double c2 = boost::math::quadrature::gauss<double, 50>::integrate(
        [&](double th) { return rho(th) * std::cos(th) * std::cos(th); }, 0.0, oracle::pi);
    CHECK(std::abs(c2 - expectation_cos2_3d(p)) <= 1e-8);
}

TEST_CASE("trace bounds and weight sums")
{
    const MoleculeSpec ocs;
    const BasisSpec b{40, 0, Parity::Even};
    const auto rec = propagate(WavePacket::basis_state(b, 0), ocs, PulseEnvelope(RampPlateauShape{}, 6e11), 0.0, 70.0,
                               PropagationConfig{});
    const auto tr = build_trace(rec, DetectionModel{}, 6);
    REQUIRE(tr.pendular_weights.cols() == 6);
    CHECK(tr.tracked_labels == std::vector<int>{0, 2, 4, 6, 8, 10});
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr.cos2_3d[i] >= 0.0);
        CHECK(tr.cos2_3d[i] <= 1.0);
        CHECK(tr.cos2_2d[i] >= 0.0);
        CHECK(tr.cos2_2d[i] <= 1.0);
        CHECK(tr.pendular_weights.row(static_cast<Eigen::Index>(i)).sum() <= 1.0 + 1e-12);
    }
    const auto full = build_trace(rec, DetectionModel{}, b.size());
    for (std::size_t i = 0; i < full.size(); ++i)
        CHECK(full.pendular_weights.row(static_cast<Eigen::Index>(i)).sum() == doctest::Approx(1.0).epsilon(1e-8));
}
