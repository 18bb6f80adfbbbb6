#pragma once

#include "rotalign/hamiltonian.hpp"
#include "rotalign/propagator.hpp"
#include "rotalign/spherical.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rotalign {

enum class RecoilModel { Axial, AxialWithBlur };
enum class ProbeAxis { Y, X };

/// Velocity-map detection of Coulomb-explosion fragments. Lab frame: the
/// alignment polarization Y lies in the detector plane (X, Y); Z is the
/// spectrometer axis. theta is measured from Y, phi about Y.
struct DetectionModel {
    RecoilModel recoil = RecoilModel::Axial;
    double blur_rad = 0.0;                 // used with AxialWithBlur
    double selectivity_exponent = 0.0;     // detection weight |cos(axis, probe)|^(2n)
    ProbeAxis probe_axis = ProbeAxis::Y;

    void validate() const;
    double effective_blur() const { return recoil == RecoilModel::AxialWithBlur ? blur_rad : 0.0; }
    std::string describe() const;
};

/// Precomputed operators for one basis and detection model.
class AlignmentEvaluator {
public:
    AlignmentEvaluator(const BasisSpec& basis, const DetectionModel& det);

    const BasisSpec& basis() const { return basis_; }

    double cos2_3d(const WavePacket& packet) const;
    double cos2_2d(const WavePacket& packet) const;

private:
    void require_basis(const WavePacket& packet) const;
    double general_cos2_2d(const Eigen::VectorXcd& c) const;

    BasisSpec basis_;
    DetectionModel det_;
    CosSqOperator cos2_;
    bool closed_form_;
    Eigen::MatrixXd abs_cos_;            // <J'|abs(cos theta)|J>
    // general path
    int l_max_ = 0;
    QuadratureRule full_;
    Eigen::MatrixXd y_full_;             // Y_J(x_k), rows k
    Eigen::MatrixXd legendre_full_;      // P_L(x_k)
    QuadratureRule half_;                // on [0, 1]
    Eigen::MatrixXd y_half_;             // Y_J(+x_k)
    Eigen::MatrixXd legendre_half_;      // P_L(+x_k)
    std::vector<double> numerator_pos_, numerator_neg_, denominator_pos_, denominator_neg_;
    std::vector<double> blur_factor_;
};

/// <psi|cos^2 theta|psi>.
double expectation_cos2_3d(const WavePacket& packet);

/// Detector-plane <cos^2 theta_2D> under the detection model.
double expectation_cos2_2d(const WavePacket& packet, const DetectionModel& det);

/// Weights |<pendular_i|psi>|^2 of the k lowest pendular states.
std::vector<double> pendular_weights(const WavePacket& packet, const PendularSpectrum& spectrum, int k);

/// rho(theta) = 2 pi sin(theta) |sum_J c_J Y_JM(theta)|^2, normalized on [0, pi].
std::vector<double> angular_density(const WavePacket& packet, const std::vector<double>& theta_grid);

struct AlignmentTrace {
    std::vector<double> times_ps;
    std::vector<double> cos2_3d;
    std::vector<double> cos2_2d;
    std::vector<double> delta_omega;
    std::vector<int> tracked_labels;
    Eigen::MatrixXd pendular_weights;     // time x tracked state, instantaneous adiabatic basis

    std::size_t size() const { return times_ps.size(); }
};

/// Observables for every snapshot; pendular weights use the spectrum at
/// each snapshot's instantaneous coupling.
AlignmentTrace build_trace(const TrajectoryRecord& record, const DetectionModel& det, int n_tracked);

} // namespace rotalign
