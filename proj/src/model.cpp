#include "rotalign/model.hpp"

#include "rotalign/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rotalign {

void MoleculeSpec::validate() const
{
    if (!(rotational_constant_cm > 0.0) || !std::isfinite(rotational_constant_cm))
        throw ConfigError("molecule: rotational constant must be positive");
    if (!(polarizability_anisotropy_A3 > 0.0) || !std::isfinite(polarizability_anisotropy_A3))
        throw ConfigError("molecule: polarizability anisotropy must be positive");
}

ReducedUnits ReducedUnits::for_molecule(const MoleculeSpec& mol)
{
    mol.validate();
    ReducedUnits u;
    // B [J] = h c B[cm^-1] * 100
    u.energy_J = constants::planck * constants::speed_of_light * 100.0 * mol.rotational_constant_cm;
    u.time_s = constants::hbar / u.energy_J;
    return u;
}

double reduced_coupling(const MoleculeSpec& mol, double intensity_W_cm2)
{
    if (intensity_W_cm2 < 0.0 || !std::isfinite(intensity_W_cm2))
        throw std::domain_error("reduced_coupling: intensity must be nonnegative");
    const auto units = ReducedUnits::for_molecule(mol);
    const double alpha_si = 4.0 * constants::pi * constants::vacuum_permittivity
                          * mol.polarizability_anisotropy_A3 * 1e-30;   // C m^2 / V
    const double intensity_si = intensity_W_cm2 * 1e4;                   // W / m^2
    return alpha_si * intensity_si
         / (2.0 * constants::speed_of_light * constants::vacuum_permittivity * units.energy_J);
}

std::string to_string(Parity p)
{
    switch (p) {
    case Parity::Even: return "even";
    case Parity::Odd: return "odd";
    case Parity::Both: return "both";
    }
    return "both";
}

Parity parse_parity(const std::string& text)
{
    if (text == "even") return Parity::Even;
    if (text == "odd") return Parity::Odd;
    if (text == "both") return Parity::Both;
    throw ConfigError("basis: parity must be one of even, odd, both (got '" + text + "')");
}

void BasisSpec::validate() const
{
    if (j_max < 0)
        throw ConfigError("basis: j_max must be nonnegative");
    if (std::abs(m) > j_max)
        throw ConfigError("basis: |m| must not exceed j_max");
    if (size() == 0)
        throw ConfigError("basis: no J values satisfy the parity and |m| constraints");
}

std::vector<int> BasisSpec::j_values() const
{
    std::vector<int> js;
    for (int j = std::abs(m); j <= j_max; ++j) {
        if (parity == Parity::Even && j % 2 != 0) continue;
        if (parity == Parity::Odd && j % 2 == 0) continue;
        js.push_back(j);
    }
    return js;
}

int BasisSpec::size() const { return static_cast<int>(j_values().size()); }

int BasisSpec::index_of(int j) const
{
    const auto js = j_values();
    for (std::size_t i = 0; i < js.size(); ++i)
        if (js[i] == j) return static_cast<int>(i);
    return -1;
}

BasisSpec BasisSpec::with_j_max(int new_j_max) const
{
    BasisSpec b = *this;
    b.j_max = new_j_max;
    return b;
}

} // namespace rotalign
