#pragma once

#include <vector>

namespace rotalign {

/// Gauss-Legendre rule on [a, b].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Y_JM(theta, 0) for J = |m| .. j_max at x = cos(theta), Condon-Shortley phase.
/// Normalized so that 2 pi * integral |Y|^2 dx = 1.
std::vector<double> spherical_theta_part(int j_max, int m, double x);

/// Legendre polynomials P_0 .. P_l_max at x.
std::vector<double> legendre_series(int l_max, double x);

} // namespace rotalign
