#ifndef EELWRIST_JACOBIAN_HPP
#define EELWRIST_JACOBIAN_HPP

// First-order (velocity) kinematics.
//
// Differentiating each driving-leg closure |C_i - B_i|^2 = rho^2 gives
//     (p_i x r_i) . omega = ((l_i x r_i) . i_i) tdot_i ,
// where p_i is the platform attachment, r_i the coupler vector, l_i the rod
// vector, omega the world angular velocity and tdot_i the motor rate. The
// yaw joint contributes a third row: [0 0 1] in the customary matrices
// (exact when pitch = 0), or the exact yaw-rate row
//     [tan(pitch) cos(yaw), tan(pitch) sin(yaw), 1]
// which the velocity maps use. Stacking rows: A omega = B qdot with
// B = diag(h1, h2, 1), so J^-1 = B^-1 A maps angular velocity to joint
// rates. B loses rank at leg tangencies (serial singularity, |h_i| -> 0);
// A loses rank when the coupler moment axes and the yaw axis become
// coplanar (parallel singularity).

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "geometry.hpp"
#include "kinematics.hpp"
#include "orientation.hpp"

namespace eelwrist {

inline constexpr double kSingularTol = 1e-9;

struct singular_jacobian_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 2-norm condition number via SVD; +inf at numerical rank deficiency.
inline double condition_number(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(2);
  if (smin <= smax * 1e-15 || smin == 0.0)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

struct JacobianPair {
  Mat3 A = Mat3::Identity();  ///< orientation-side rows
  Mat3 B = Mat3::Identity();  ///< joint-side diagonal
  /// J^-1 = B^-1 A (angular velocity -> joint rates). Throws
  /// singular_jacobian_error at a serial singularity.
  Mat3 j_inverse() const {
    for (int i = 0; i < 3; ++i)
      if (std::abs(B(i, i)) < 1e-14)
        throw singular_jacobian_error(
            "serial singularity: joint-side matrix is not invertible");
    Mat3 out = A;
    for (int i = 0; i < 3; ++i) out.row(i) /= B(i, i);
    return out;
  }
};

/// Actuation matrices at a consistent (joints, orientation) pair.
///
/// With exact_yaw_row = false (default) the third row is the customary
/// [0 0 1]; with true it is the exact yaw-rate row, needed whenever
/// pitch != 0 and velocities are to be mapped exactly.
inline JacobianPair jacobians(const MechanismGeometry& g, const JointAngles& q,
                              const Orientation& o,
                              bool exact_yaw_row = false) {
  LegPoints p = leg_points(g, q, o);
  Vec3 l1 = p.b1 - g.a1, r1 = p.c1 - p.b1;
  Vec3 l2 = p.b2 - g.a2, r2 = p.c2 - p.b2;
  JacobianPair jp;
  jp.A.row(0) = p.c1.cross(r1).transpose();
  jp.A.row(1) = p.c2.cross(r2).transpose();
  if (exact_yaw_row) {
    RpyAngles rpy = orientation_to_rpy(o).angles;
    double t = std::tan(rpy.pitch);
    jp.A.row(2) = Vec3(t * std::cos(rpy.yaw), t * std::sin(rpy.yaw), 1.0)
                      .transpose();
  } else {
    jp.A.row(2) = Vec3(0, 0, 1).transpose();
  }
  jp.B = Mat3::Zero();
  jp.B(0, 0) = l1.cross(r1).dot(g.i1);
  jp.B(1, 1) = l2.cross(r2).dot(g.i2);
  jp.B(2, 2) = 1.0;
  return jp;
}

/// qdot = B^-1 A_exact omega.
inline Vec3 joint_rates_from_angular_velocity(const MechanismGeometry& g,
                                              const JointAngles& q,
                                              const Orientation& o,
                                              const Vec3& omega) {
  return jacobians(g, q, o, /*exact_yaw_row=*/true).j_inverse() * omega;
}

/// omega = A_exact^-1 B qdot.
inline Vec3 angular_velocity_from_joint_rates(const MechanismGeometry& g,
                                              const JointAngles& q,
                                              const Orientation& o,
                                              const Vec3& qdot) {
  JacobianPair jp = jacobians(g, q, o, /*exact_yaw_row=*/true);
  Eigen::ColPivHouseholderQR<Mat3> qr(jp.A);
  if (qr.rank() < 3)
    throw singular_jacobian_error(
        "parallel singularity: orientation-side matrix is not invertible");
  return qr.solve(jp.B * qdot);
}

struct SingularityReport {
  JacobianPair jac;          ///< customary matrices ([0 0 1] yaw row)
  double det_a = 0.0;        ///< parallel-singularity margin
  double det_b = 0.0;
  double cond_a = 1.0;
  double cond_b = 1.0;
  std::array<double, 2> serial_margin{0, 0};  ///< h_i = (l_i x r_i) . i_i
  std::array<bool, 2> serial{false, false};   ///< leg at reach tangency
  bool parallel = false;  ///< coupler moment axes + yaw axis coplanar
  bool any() const { return serial[0] || serial[1] || parallel; }
};

inline SingularityReport singularity_report(const MechanismGeometry& g,
                                            const JointAngles& q,
                                            const Orientation& o,
                                            double tol = kSingularTol) {
  SingularityReport rep;
  rep.jac = jacobians(g, q, o, /*exact_yaw_row=*/false);
  rep.det_a = rep.jac.A.determinant();
  rep.det_b = rep.jac.B.determinant();
  rep.cond_a = condition_number(rep.jac.A);
  rep.cond_b = condition_number(rep.jac.B);
  rep.serial_margin = {rep.jac.B(0, 0), rep.jac.B(1, 1)};
  rep.serial = {std::abs(rep.serial_margin[0]) <= tol,
                std::abs(rep.serial_margin[1]) <= tol};
  rep.parallel = std::abs(rep.det_a) <= tol;
  return rep;
}

struct IsotropyReport {
  double cond_a = 1.0;
  double cond_b = 1.0;
  bool a_isotropic = false;  ///< orientation-side rows orthogonal, equal norm
  bool b_isotropic = false;  ///< equal actuation gains on all joints
};

inline IsotropyReport isotropy_check(const MechanismGeometry& g,
                                     const JointAngles& q, const Orientation& o,
                                     double tol = 1e-9) {
  JacobianPair jp = jacobians(g, q, o, /*exact_yaw_row=*/false);
  IsotropyReport rep;
  rep.cond_a = condition_number(jp.A);
  rep.cond_b = condition_number(jp.B);
  rep.a_isotropic = std::isfinite(rep.cond_a) && rep.cond_a - 1.0 <= tol;
  rep.b_isotropic = std::isfinite(rep.cond_b) && rep.cond_b - 1.0 <= tol;
  return rep;
}

}  // namespace eelwrist

#endif  // EELWRIST_JACOBIAN_HPP
