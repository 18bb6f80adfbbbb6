#include "oracles.hpp"

#include "rotalign/errors.hpp"
#include "rotalign/model.hpp"

#include <doctest.h>

using namespace rotalign;

TEST_CASE("reduced coupling vanishes without field")
{
    MoleculeSpec mol;
    CHECK(reduced_coupling(mol, 0.0) == 0.0);
}

TEST_CASE("reduced coupling is linear in intensity and anisotropy")
{
    MoleculeSpec mol;
    const double base = reduced_coupling(mol, 1e11);
    CHECK(reduced_coupling(mol, 3e11) == doctest::Approx(3.0 * base).epsilon(1e-14));
    MoleculeSpec twice = mol;
    twice.polarizability_anisotropy_A3 *= 2.0;
    CHECK(reduced_coupling(twice, 1e11) == doctest::Approx(2.0 * base).epsilon(1e-14));
}

TEST_CASE("reduced coupling matches a hand SI conversion to 6 significant figures")
{
    MoleculeSpec mol;
    const double expected = oracle::delta_omega_si(0.2029, 4.04, 6e11);
    CHECK(reduced_coupling(mol, 6e11) == doctest::Approx(expected).epsilon(5e-7));
}

TEST_CASE("negative intensity is a domain error")
{
    MoleculeSpec mol;
    CHECK_THROWS_AS(reduced_coupling(mol, -1.0), std::domain_error);
}

TEST_CASE("molecule validation")
{
    MoleculeSpec mol;
    CHECK_NOTHROW(mol.validate());
    mol.rotational_constant_cm = 0.0;
    CHECK_THROWS_AS(mol.validate(), ConfigError);
    mol = MoleculeSpec{};
    mol.polarizability_anisotropy_A3 = -1.0;
    CHECK_THROWS_AS(mol.validate(), ConfigError);
}

TEST_CASE("reduced units and revival period")
{
    MoleculeSpec mol;
    const auto u = ReducedUnits::for_molecule(mol);
    const double b_joule = 6.62607015e-34 * 2.99792458e8 * 20.29;
    CHECK(u.time_s == doctest::Approx(1.054571817e-34 / b_joule).epsilon(1e-12));
    CHECK(u.revival_period_ps() == doctest::Approx(82.2).epsilon(1e-3));
    CHECK(u.to_ps(u.to_reduced_time(13.7)) == doctest::Approx(13.7));
}

TEST_CASE("basis specification")
{
    BasisSpec even{10, 0, Parity::Even};
    CHECK(even.size() == 6);
    CHECK(even.j_values() == std::vector<int>{0, 2, 4, 6, 8, 10});
    CHECK(even.index_of(4) == 2);
    CHECK(even.index_of(3) == -1);

    BasisSpec odd{9, 1, Parity::Odd};
    CHECK(odd.j_values() == std::vector<int>{1, 3, 5, 7, 9});

    BasisSpec both{5, 2, Parity::Both};
    CHECK(both.j_values() == std::vector<int>{2, 3, 4, 5});
    CHECK(both.with_j_max(7).size() == 6);

    CHECK_THROWS_AS((BasisSpec{2, 3, Parity::Both}.validate()), ConfigError);
    CHECK_THROWS_AS((BasisSpec{-1, 0, Parity::Even}.validate()), ConfigError);
}

TEST_CASE("parity parsing round trip")
{
    for (auto p : {Parity::Even, Parity::Odd, Parity::Both}) CHECK(parse_parity(to_string(p)) == p);
    CHECK_THROWS_AS(parse_parity("sideways"), ConfigError);
}
