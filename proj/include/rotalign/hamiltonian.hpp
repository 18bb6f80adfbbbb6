#pragma once

#include "rotalign/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rotalign {

/// <j', m| cos^2(theta) |j, m>. Nonzero only for |j - j'| in {0, 2}.
/// Throws std::domain_error when |m| exceeds j or j'.
double cos2_matrix_element(int j, int j_prime, int m);

/// cos^2(theta) restricted to one basis block. offdiag2[i] couples basis
/// state i to the state with J + 2 (zero when that state is outside the basis).
struct CosSqOperator {
    BasisSpec basis;
    std::vector<double> diag;
    std::vector<double> offdiag2;
    std::vector<int> partner;   // basis index of J + 2, or -1

    static CosSqOperator build(const BasisSpec& basis);

    Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const;
    double expectation(const Eigen::VectorXcd& psi) const;
    Eigen::MatrixXd dense() const;
};

/// Symmetric band matrix in lower band storage: band(d, i) = A(i + d, i).
class SymmetricBandMatrix {
public:
    SymmetricBandMatrix(int n, int bandwidth);

    int size() const { return n_; }
    int bandwidth() const { return bandwidth_; }

    double operator()(int i, int j) const;
    void set(int i, int j, double value);

    Eigen::MatrixXd dense() const;

private:
    int n_;
    int bandwidth_;
    Eigen::MatrixXd band_;
};

/// H = diag(J(J+1)) - dw cos^2(theta), energies in units of B.
SymmetricBandMatrix build_hamiltonian(const BasisSpec& basis, double delta_omega);

/// One chain of basis states coupled by DeltaJ = 2 (a J-parity sub-block).
/// Within a chain the Hamiltonian is tridiagonal.
struct TridiagonalBlock {
    std::vector<int> indices;      // basis indices, ascending J
    Eigen::VectorXd diag;
    Eigen::VectorXd subdiag;
};

std::vector<TridiagonalBlock> hamiltonian_blocks(const CosSqOperator& cos2, double delta_omega);

struct PendularSpectrum {
    BasisSpec basis;
    double delta_omega = 0.0;
    Eigen::VectorXd energies;          // ascending, units of B
    Eigen::MatrixXd eigenvectors;      // columns are states in the |J,M> basis
    std::vector<int> labels;           // adiabatic J~
    std::vector<bool> bound;           // energy below the asymptote V(pi/2) = 0
    std::vector<bool> converged;       // top-of-basis weight < 1e-10
    std::vector<double> cos2;          // <cos^2 theta> of each state

    int size() const { return static_cast<int>(energies.size()); }

    /// Position of the state with adiabatic label J~, or -1.
    int index_of_label(int label) const;

    bool all_converged(int n_lowest) const;
};

inline constexpr double convergence_threshold = 1e-10;

/// Full eigendecomposition of the instantaneous Hamiltonian.
PendularSpectrum eigensolve_pendular(const BasisSpec& basis, double delta_omega);

/// Doubles j_max until the n_required lowest states are converged.
/// Throws NumericalError when j_max_limit is exceeded.
PendularSpectrum eigensolve_converged(const BasisSpec& basis, double delta_omega, int n_required,
                                      int j_max_limit = 1280);

/// Spectra along a path of field strengths with labels carried by
/// maximal eigenvector overlap between consecutive points.
std::vector<PendularSpectrum> adiabatic_track(const BasisSpec& basis, const std::vector<double>& delta_omega_path);

} // namespace rotalign
