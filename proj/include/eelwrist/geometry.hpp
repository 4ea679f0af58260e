#ifndef EELWRIST_GEOMETRY_HPP
#define EELWRIST_GEOMETRY_HPP

// Mechanism description for the 3-DOF spherical parallel wrist.
//
// Two RUS legs (revolute - universal - spherical) drive the platform tilt:
// a motor at anchor a_i swings a rod of length rod_length about the fixed
// axis i_i, and a coupler of length coupler_length links the rod tip b_i to
// the platform ball joint c_i. A third leg, three concurrent revolutes
// through the rotation center O, carries the platform and actuates the yaw
// angle directly.
//
// All shipped variants are "unit mechanisms": coupler length 1, platform
// attachments at unit distance from O, dimensionless coordinates. scale_mm
// converts to millimeters for export and is pure metadata.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "orientation.hpp"

namespace eelwrist {

struct invalid_geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DesignVariant {
  parallel_axes,       // offset anchors, both motor axes along x, rod length 1
  orthogonal_axes,     // anchors at the rotation center, axes x and y, rod sqrt(2)
  parallel_actuators,  // anchors astride the base, axes along x, rod sqrt(2)/2
};

inline std::string to_string(DesignVariant v) {
  switch (v) {
    case DesignVariant::parallel_axes: return "parallel_axes";
    case DesignVariant::orthogonal_axes: return "orthogonal_axes";
    case DesignVariant::parallel_actuators: return "parallel_actuators";
  }
  return "unknown";
}

/// Accepts both underscore and hyphen spellings (e.g. "parallel-actuators").
inline DesignVariant variant_from_string(const std::string& s) {
  std::string n = s;
  for (char& c : n)
    if (c == '-') c = '_';
  if (n == "parallel_axes") return DesignVariant::parallel_axes;
  if (n == "orthogonal_axes") return DesignVariant::orthogonal_axes;
  if (n == "parallel_actuators") return DesignVariant::parallel_actuators;
  throw invalid_geometry_error("unknown design variant: " + s);
}

/// Actuated joint angles in radians. t1, t2 are the rod motor angles
/// (zero = rod along its home direction), t3 the yaw motor.
struct JointAngles {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
};

/// IK branch label per driving leg: the sign of (l_i x r_i) . i_i, which
/// flips between the two closure roots and vanishes at the tangent
/// (serial-singular) configuration.
/// Elbow signs of the two legs: +1/-1 select a closure branch; 0 appears in
/// reported solutions when a leg sits exactly on its tangent boundary (the
/// branches have coalesced) and is never valid as a request.
struct WorkingMode {
  int s1 = +1;
  int s2 = +1;
};

/// Reference data recorded at the designed home configuration.
struct HomePose {
  JointAngles joints;
  Orientation orientation;
  WorkingMode mode;
  /// Sign of (p2 x r2) . x'' at home; selects the forward-kinematics roll
  /// branch that contains the home configuration.
  int assembly_sign = +1;
};

struct MechanismGeometry {
  DesignVariant variant = DesignVariant::parallel_actuators;

  // Anchor design constants: a1 = (a, b, c), a2 = (-a, b, c).
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  Vec3 a1 = Vec3::Zero();  ///< motor anchor, leg 1
  Vec3 a2 = Vec3::Zero();  ///< motor anchor, leg 2
  Vec3 i1 = Vec3::UnitX();  ///< motor axis, leg 1 (unit)
  Vec3 i2 = Vec3::UnitX();  ///< motor axis, leg 2 (unit)
  Vec3 d1 = Vec3::UnitY();  ///< rod direction at t1 = 0 (unit, perp. to i1)
  Vec3 d2 = Vec3::UnitY();  ///< rod direction at t2 = 0 (unit, perp. to i2)

  double rod_length = 1.0;
  double coupler_length = 1.0;

  Vec3 c1_mobile = Vec3::UnitX();  ///< platform attachment, mobile frame
  Vec3 c2_mobile = Vec3::UnitY();  ///< platform attachment, mobile frame

  double scale_mm = 100.0;  ///< metadata: unit length in millimeters

  HomePose home;

  /// Rod sweep direction: e_i = i_i x d_i, so b_i traces
  /// a_i + rod_length * (cos(t) d_i + sin(t) e_i).
  Vec3 e1() const { return i1.cross(d1); }
  Vec3 e2() const { return i2.cross(d2); }
};

/// Positions of the four passive joints at a given configuration.
struct LegPoints {
  Vec3 b1, b2;  ///< rod tips
  Vec3 c1, c2;  ///< platform ball joints (world frame)
};

inline Vec3 rod_tip(const MechanismGeometry& g, int leg, double theta) {
  const Vec3& a = (leg == 1) ? g.a1 : g.a2;
  const Vec3& d = (leg == 1) ? g.d1 : g.d2;
  Vec3 e = (leg == 1) ? g.e1() : g.e2();
  return a + g.rod_length * (std::cos(theta) * d + std::sin(theta) * e);
}

inline LegPoints leg_points(const MechanismGeometry& g, const JointAngles& q,
                            const Orientation& o) {
  LegPoints p;
  p.b1 = rod_tip(g, 1, q.t1);
  p.b2 = rod_tip(g, 2, q.t2);
  p.c1 = o * g.c1_mobile;
  p.c2 = o * g.c2_mobile;
  return p;
}

/// Squared-length closure defects (|c_i - b_i|^2 - coupler^2) per driving
/// leg; zero at any assembled configuration.
inline std::array<double, 2> closure_residuals(const MechanismGeometry& g,
                                               const JointAngles& q,
                                               const Orientation& o) {
  LegPoints p = leg_points(g, q, o);
  double rho2 = g.coupler_length * g.coupler_length;
  return {(p.c1 - p.b1).squaredNorm() - rho2,
          (p.c2 - p.b2).squaredNorm() - rho2};
}

namespace detail {

inline void validate_geometry(MechanismGeometry& g) {
  if (!(g.rod_length > 0.0) || !(g.coupler_length > 0.0))
    throw invalid_geometry_error("rod and coupler lengths must be positive");
  auto unitize = [](Vec3& v, const char* what) {
    double n = v.norm();
    if (n < 1e-12)
      throw invalid_geometry_error(std::string("degenerate vector: ") + what);
    v /= n;
  };
  unitize(g.i1, "i1");
  unitize(g.i2, "i2");
  // Rod home directions must sweep a circle about the motor axis: project
  // out any axis component, then renormalize.
  g.d1 -= g.d1.dot(g.i1) * g.i1;
  g.d2 -= g.d2.dot(g.i2) * g.i2;
  unitize(g.d1, "d1");
  unitize(g.d2, "d2");
}

}  // namespace detail

/// Builds one of the three shipped unit-mechanism variants.
///
/// The shared home configuration is joints (0, 0, pi/4) at orientation
/// Rz(pi/4): the closure is exact there and the differential properties the
/// variants were designed around (isotropy for parallel_axes, the sqrt(2)/2
/// transmission factor for parallel_actuators) hold at that configuration.
/// For parallel_axes and parallel_actuators the couplers point along +z at
/// home; the center-anchored orthogonal_axes variant cannot satisfy that
/// and its couplers sit 45 degrees off vertical instead.
inline MechanismGeometry make_geometry(DesignVariant v) {
  MechanismGeometry g;
  g.variant = v;
  const double s2 = std::sqrt(2.0) / 2.0;
  switch (v) {
    case DesignVariant::parallel_axes:
      g.a = s2;
      g.b = (std::sqrt(2.0) - 2.0) / 2.0;
      g.c = -1.0;
      g.i1 = g.i2 = Vec3::UnitX();
      g.d1 = g.d2 = Vec3::UnitY();
      g.rod_length = 1.0;
      break;
    case DesignVariant::orthogonal_axes:
      // Both anchors at the rotation center. A unit rod then closes at the
      // home yaw with the rod inclined 45 degrees out of the motor plane;
      // a sqrt(2) rod would place home exactly at the closure tangency
      // (undefined working mode), so the rod is kept at unit length.
      g.a = g.b = g.c = 0.0;
      g.i1 = Vec3::UnitX();
      g.i2 = Vec3::UnitY();
      g.d1 = Vec3(0.0, s2, -s2);
      g.d2 = Vec3(-s2, 0.0, -s2);
      g.rod_length = 1.0;
      break;
    case DesignVariant::parallel_actuators:
      g.a = s2;
      g.b = 0.0;
      g.c = -1.0;
      g.i1 = g.i2 = Vec3::UnitX();
      g.d1 = g.d2 = Vec3::UnitY();
      g.rod_length = s2;
      break;
  }
  g.a1 = Vec3(g.a, g.b, g.c);
  g.a2 = Vec3(-g.a, g.b, g.c);
  g.coupler_length = 1.0;
  detail::validate_geometry(g);

  g.home.joints = JointAngles{0.0, 0.0, kPi / 4.0};
  g.home.orientation = rpy_to_orientation(kPi / 4.0, 0.0, 0.0);
  g.home.mode = WorkingMode{+1, +1};
  g.home.assembly_sign = +1;

  auto res = closure_residuals(g, g.home.joints, g.home.orientation);
  if (std::abs(res[0]) > 1e-12 || std::abs(res[1]) > 1e-12)
    throw invalid_geometry_error("home configuration does not close");
  return g;
}

/// The designed reference configuration (cached on the geometry).
inline const HomePose& home_pose(const MechanismGeometry& g) { return g.home; }

}  // namespace eelwrist

#endif  // EELWRIST_GEOMETRY_HPP
