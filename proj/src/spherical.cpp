#include "rotalign/spherical.hpp"

#include "rotalign/model.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rotalign {

QuadratureRule gauss_legendre(int n, double a, double b)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

std::vector<double> spherical_theta_part(int j_max, int m, double x)
{
    const int am = std::abs(m);
    if (am > j_max) return {};
    std::vector<double> out(j_max - am + 1);
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    // fully normalized associated Legendre recurrence in |m|, then in l
    double pmm = 1.0 / std::sqrt(4.0 * constants::pi);
    for (int k = 1; k <= am; ++k)
        pmm *= -s * std::sqrt((2.0 * k + 1.0) / (2.0 * k));
    if (m < 0 && am % 2 != 0) pmm = -pmm; // Y_{l,-m} = (-1)^m conj(Y_lm)
    out[0] = pmm;
    if (j_max == am) return out;
    double pm1 = x * std::sqrt(2.0 * am + 3.0) * pmm;
    out[1] = pm1;
    double p_prev = pmm, p_cur = pm1;
    for (int l = am + 2; l <= j_max; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - am * am));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - am * am) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        const double p_next = a * (x * p_cur - b * p_prev);
        out[l - am] = p_next;
        p_prev = p_cur;
        p_cur = p_next;
    }
    return out;
}

std::vector<double> legendre_series(int l_max, double x)
{
    std::vector<double> p(l_max + 1);
    p[0] = 1.0;
    if (l_max >= 1) p[1] = x;
    for (int l = 2; l <= l_max; ++l)
        p[l] = ((2.0 * l - 1.0) * x * p[l - 1] - (l - 1.0) * p[l - 2]) / l;
    return p;
}

} // namespace rotalign
