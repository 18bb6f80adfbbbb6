#pragma once

#include <string>
#include <vector>

namespace rotalign {

namespace constants {
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double speed_of_light = 2.99792458e8;    // m / s
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F / m
inline constexpr double pi = 3.14159265358979323846;
} // namespace constants

/// Linear rigid rotor coupled to a nonresonant field through its
/// polarizability anisotropy.
struct MoleculeSpec {
    std::string name = "OCS";
    double rotational_constant_cm = 0.2029;        // B, cm^-1
    double polarizability_anisotropy_A3 = 4.04;    // alpha_par - alpha_perp, Angstrom^3
    std::string source;                            // provenance of the constants

    void validate() const;
};

/// Dimensionless system: energies in units of B, time in units of hbar/B.
struct ReducedUnits {
    double energy_J = 0.0;
    double time_s = 0.0;

    static ReducedUnits for_molecule(const MoleculeSpec& mol);

    double time_ps() const { return time_s * 1e12; }
    double to_reduced_time(double t_ps) const { return t_ps / time_ps(); }
    double to_ps(double tau) const { return tau * time_ps(); }

    /// Full revival period pi hbar / B of the rigid rotor, in ps.
    double revival_period_ps() const { return constants::pi * time_ps(); }

    /// Converts a frequency in cycles per reduced time unit into 1/ps.
    double to_inverse_ps(double reduced_frequency) const { return reduced_frequency / time_ps(); }
};

/// Reduced coupling dw = da I / (2 c eps0 B) for a peak intensity in W/cm^2.
double reduced_coupling(const MoleculeSpec& mol, double intensity_W_cm2);

enum class Parity { Even, Odd, Both };

std::string to_string(Parity p);
Parity parse_parity(const std::string& text);

/// Truncated |J,M> basis of one conserved M and a J-parity class.
struct BasisSpec {
    int j_max = 40;
    int m = 0;
    Parity parity = Parity::Even;

    void validate() const;

    /// J values in ascending order.
    std::vector<int> j_values() const;
    int size() const;

    /// Position of J in j_values(), or -1 when J is not part of the basis.
    int index_of(int j) const;

    bool operator==(const BasisSpec&) const = default;

    /// Basis with the same M and parity and a new cutoff.
    BasisSpec with_j_max(int new_j_max) const;
};

} // namespace rotalign
