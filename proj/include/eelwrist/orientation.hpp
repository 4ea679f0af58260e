#ifndef EELWRIST_ORIENTATION_HPP
#define EELWRIST_ORIENTATION_HPP

// Orientation representations for the wrist: proper rotation matrices as the
// canonical form, with roll-pitch-yaw (intrinsic Z-Y'-X'') and
// tilt-and-torsion (azimuth/tilt/torsion, a ZYZ variant) parameterizations.
//
// Conventions:
//   rpy:  R = Rz(yaw) * Ry(pitch) * Rx(roll), pitch in [-pi/2, pi/2]
//   tnt:  R = Rz(azimuth) * Ry(tilt) * Rz(torsion - azimuth), tilt in [0, pi]
// Degenerate extractions are canonicalized: gimbal lock sets roll := 0,
// zero (or pi) tilt sets azimuth := 0.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace eelwrist {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// Tolerance for accepting a matrix as a rotation after projection.
inline constexpr double kOrthonormalTol = 1e-12;
/// Tolerance for accepting a raw matrix for projection at all.
inline constexpr double kProjectionTol = 1e-6;

struct invalid_rotation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
inline double wrap_pi(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline Mat3 rot_x(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

inline Mat3 rot_y(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

inline Mat3 rot_z(double a) {
  double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

/// A proper rotation. Guaranteed orthonormal (within 1e-12) with det +1.
class Orientation {
 public:
  Orientation() : r_(Mat3::Identity()) {}

  /// Accepts a matrix that is a rotation up to 1e-6 and projects it onto
  /// SO(3) via the polar factor; rejects anything farther away or with a
  /// non-positive determinant.
  static Orientation from_matrix(const Mat3& m) {
    double err = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(err <= kProjectionTol) || !(m.determinant() > 0.0))
      throw invalid_rotation_error("matrix is not a proper rotation");
    if (err <= kOrthonormalTol) return Orientation(m);
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    return Orientation(r);
  }

  static Orientation identity() { return Orientation(); }

  const Mat3& matrix() const { return r_; }

  Orientation inverse() const { return Orientation(Mat3(r_.transpose())); }

  Orientation operator*(const Orientation& o) const {
    return Orientation(Mat3(r_ * o.r_));
  }

  Vec3 operator*(const Vec3& v) const { return r_ * v; }

  /// Max-norm orthonormality defect, for invariant checks.
  double orthonormality_error() const {
    return (r_.transpose() * r_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  }

 private:
  explicit Orientation(const Mat3& r) : r_(r) {}
  Mat3 r_;
};

/// Intrinsic Z-Y'-X'' angles; yaw is also the wrist's third actuated joint.
struct RpyAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

/// Tilt-and-torsion angles (azimuth phi, tilt theta, torsion psi).
struct TiltTorsion {
  double azimuth = 0.0;
  double tilt = 0.0;
  double torsion = 0.0;
};

struct RpyExtraction {
  RpyAngles angles;
  /// Set when |pitch| is within 1e-9 of pi/2; roll is canonicalized to 0.
  bool gimbal_lock = false;
};

inline Orientation rpy_to_orientation(const RpyAngles& a) {
  return Orientation::from_matrix(rot_z(a.yaw) * rot_y(a.pitch) *
                                  rot_x(a.roll));
}

inline Orientation rpy_to_orientation(double yaw, double pitch, double roll) {
  return rpy_to_orientation(RpyAngles{yaw, pitch, roll});
}

inline RpyExtraction orientation_to_rpy(const Orientation& o) {
  const Mat3& r = o.matrix();
  double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  RpyExtraction out;
  out.angles.pitch = std::asin(sp);
  if (std::abs(out.angles.pitch) > kPi / 2.0 - 1e-9) {
    // Gimbal lock: only yaw -/+ roll is observable; put it all in yaw.
    out.gimbal_lock = true;
    out.angles.roll = 0.0;
    out.angles.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    out.angles.yaw = std::atan2(r(1, 0), r(0, 0));
    out.angles.roll = std::atan2(r(2, 1), r(2, 2));
  }
  return out;
}

inline Orientation tnt_to_orientation(const TiltTorsion& a) {
  return Orientation::from_matrix(rot_z(a.azimuth) * rot_y(a.tilt) *
                                  rot_z(a.torsion - a.azimuth));
}

inline Orientation tnt_to_orientation(double azimuth, double tilt,
                                      double torsion) {
  return tnt_to_orientation(TiltTorsion{azimuth, tilt, torsion});
}

/// Total: degenerate tilts collapse to the azimuth := 0 convention.
inline TiltTorsion orientation_to_tnt(const Orientation& o) {
  const Mat3& r = o.matrix();
  double s_tilt = std::hypot(r(0, 2), r(1, 2));
  TiltTorsion out;
  out.tilt = std::atan2(s_tilt, r(2, 2));
  if (s_tilt <= 1e-12) {
    out.azimuth = 0.0;
    if (r(2, 2) > 0.0) {
      out.torsion = std::atan2(r(1, 0), r(0, 0));  // pure z-rotation
    } else {
      out.tilt = kPi;
      out.torsion = std::atan2(r(0, 1), -r(0, 0));
    }
    return out;
  }
  double alpha = std::atan2(r(1, 2), r(0, 2));
  double gamma = std::atan2(r(2, 1), -r(2, 0));
  out.azimuth = alpha;
  out.torsion = wrap_pi(gamma + alpha);
  return out;
}

}  // namespace eelwrist

#endif  // EELWRIST_ORIENTATION_HPP
