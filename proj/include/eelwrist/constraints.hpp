#ifndef EELWRIST_CONSTRAINTS_HPP
#define EELWRIST_CONSTRAINTS_HPP

// Mechanical feasibility of a configuration.
//
// A pose that closes kinematically can still be unbuildable: ball/universal
// joints have limited cone angles, the two motor rods can collide with each
// other or with the base plate, and the couplers sweep through the rod
// space. Each check reports a signed margin (positive = feasible) so
// workspace boundaries can be located by bisection.
//
// Joint cones, measured from the joint's neutral axis to the coupler:
//   - rod-tip joints B_i:   axis  u_i = unit(i_i x unit(l_i)), the direction
//     the coupler leaves the rod at the home pose;
//   - platform joints C_i:  axis -z_m (the platform's -z), again aligned
//     with the coupler at home.
// Both angles are exactly zero at the home configuration by construction.
//
// Interference uses exact clamped segment-segment distance; a sampled
// point-projection variant is kept as a cross-check reference (it brackets
// the exact value from above).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "jacobian.hpp"
#include "kinematics.hpp"
#include "orientation.hpp"

namespace eelwrist {

/// Exact distance between segments [p1,q1] and [p2,q2] (clamped
/// closest-point parameters).
inline double segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                               const Vec3& q2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double eps = 1e-14;
  if (a <= eps && e <= eps) {
    return r.norm();
  } else if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double denom = a * e - b * b;
      if (denom > eps)
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p1 + s * d1 - (p2 + t * d2)).norm();
}

/// Sampled reference distance: walk n+1 points along [p2,q2], project each
/// onto the line of [p1,q1], and keep a projection only when its foot lies
/// within the first segment (both foot-to-endpoint distances at most the
/// segment length). Returns +infinity when no foot qualifies. Always an
/// upper bound on segment_distance().
inline double segment_distance_sampled(const Vec3& p1, const Vec3& q1,
                                       const Vec3& p2, const Vec3& q2,
                                       int n = 64) {
  Vec3 d1 = q1 - p1;
  double len1 = d1.norm();
  if (len1 < 1e-14) n = std::max(n, 1);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    Vec3 m = p2 + (static_cast<double>(j) / n) * (q2 - p2);
    double u = (len1 < 1e-14) ? 0.0 : d1.dot(m - p1) / (len1 * len1);
    Vec3 foot = p1 + u * d1;
    if ((foot - p1).norm() <= len1 && (foot - q1).norm() <= len1)
      best = std::min(best, (m - foot).norm());
  }
  return best;
}

/// Feasibility limits. Angles in radians, distances in mechanism units
/// (coupler length = 1).
struct ConstraintParams {
  /// Cone half-angle limit shared by all four passive joints unless
  /// overridden per joint below. The default is calibrated so that a full
  /// sweep of the reference design reproduces actuator extents of about
  /// [-17 deg, +38 deg] on joints 1 and 2 (see scripts/recalibrate.sh).
  double lima = deg_to_rad(35.0);
  /// Rod-to-rod and rod-to-base clearance. The default equals
  /// sin(17 deg) * rod_length for the reference design, which pins the
  /// actuator floor at exactly -17 deg.
  double limd = 0.206738015;
  /// Clearance for the coupler-involved segment pairs.
  double clearance = 0.05;
  /// Per-joint cone overrides, order {B1, B2, C1, C2}.
  std::array<std::optional<double>, 4> cone_override{};
  /// Sample count for the reference distance method.
  int samples_n = 64;
  /// When set, additionally require min(|h1|, |h2|, |det A|) to stay above
  /// this margin (keeps sweeps away from singular poses).
  std::optional<double> singularity_margin{};

  double cone_limit(int idx) const {
    return cone_override[idx] ? *cone_override[idx] : lima;
  }
};

struct ConstraintCheck {
  std::string id;      ///< stable identifier, e.g. "cone_b1", "rod_rod"
  double value = 0.0;  ///< measured quantity (angle or distance)
  double limit = 0.0;
  double margin = 0.0;  ///< positive = satisfied
  bool ok = true;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<ConstraintCheck> checks;
  std::array<double, 4> cone_angles{0, 0, 0, 0};  ///< B1, B2, C1, C2
  double rod_rod = 0.0;       ///< exact rod-to-rod distance
  double rod_rod_sampled = 0.0;  ///< reference method, for comparison
  std::array<double, 2> base_margin{0, 0};

  const ConstraintCheck* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

namespace detail {

inline double angle_between(const Vec3& u, const Vec3& v) {
  double c = u.dot(v) / (u.norm() * v.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace detail

/// Full constraint evaluation at a consistent (joints, orientation) pair.
inline FeasibilityReport check_constraints(const MechanismGeometry& g,
                                           const JointAngles& q,
                                           const Orientation& o,
                                           const ConstraintParams& cp = {}) {
  FeasibilityReport rep;
  LegPoints p = leg_points(g, q, o);
  Vec3 l1 = p.b1 - g.a1, l2 = p.b2 - g.a2;
  Vec3 r1 = p.c1 - p.b1, r2 = p.c2 - p.b2;
  Vec3 zm = o * Vec3::UnitZ();

  auto add = [&](const std::string& id, double value, double limit,
                 double margin) {
    ConstraintCheck c{id, value, limit, margin, margin >= 0.0};
    rep.checks.push_back(c);
    if (!c.ok) rep.feasible = false;
  };

  // Joint cones (limit is an upper bound on the angle).
  Vec3 axes_b[2] = {g.i1.cross(l1.normalized()).normalized(),
                    g.i2.cross(l2.normalized()).normalized()};
  Vec3 rs[2] = {r1, r2};
  for (int i = 0; i < 2; ++i) {
    double ang = detail::angle_between(rs[i], axes_b[i]);
    rep.cone_angles[i] = ang;
    double lim = cp.cone_limit(i);
    add(i == 0 ? "cone_b1" : "cone_b2", ang, lim, lim - ang);
  }
  for (int i = 0; i < 2; ++i) {
    double ang = detail::angle_between(-rs[i], -zm);
    rep.cone_angles[2 + i] = ang;
    double lim = cp.cone_limit(2 + i);
    add(i == 0 ? "cone_c1" : "cone_c2", ang, lim, lim - ang);
  }

  // Rod-to-rod clearance (lower bound on distance).
  rep.rod_rod = segment_distance(g.a1, p.b1, g.a2, p.b2);
  rep.rod_rod_sampled =
      segment_distance_sampled(g.a1, p.b1, g.a2, p.b2, cp.samples_n);
  add("rod_rod", rep.rod_rod, cp.limd, rep.rod_rod - cp.limd);

  // Base plate: the rods may not dip below the motor plane by more than
  // the clearance; tip height above the plane is L sin(t_i).
  double t[2] = {q.t1, q.t2};
  for (int i = 0; i < 2; ++i) {
    double m = g.rod_length * std::sin(t[i]) + cp.limd;
    rep.base_margin[i] = m;
    add(i == 0 ? "base_rod1" : "base_rod2", g.rod_length * std::sin(t[i]),
        -cp.limd, m);
  }

  // Crossing pairs involving the couplers.
  double d12 = segment_distance(g.a1, p.b1, p.b2, p.c2);
  add("rod1_coupler2", d12, cp.clearance, d12 - cp.clearance);
  double d21 = segment_distance(g.a2, p.b2, p.b1, p.c1);
  add("rod2_coupler1", d21, cp.clearance, d21 - cp.clearance);
  double dcc = segment_distance(p.b1, p.c1, p.b2, p.c2);
  add("coupler_coupler", dcc, cp.clearance, dcc - cp.clearance);

  if (cp.singularity_margin) {
    SingularityReport sr = singularity_report(g, q, o);
    double m = std::min({std::abs(sr.serial_margin[0]),
                         std::abs(sr.serial_margin[1]), std::abs(sr.det_a)});
    add("singularity", m, *cp.singularity_margin,
        m - *cp.singularity_margin);
  }
  return rep;
}

/// Orientation-level feasibility: solve the inverse problem in the home
/// working mode, then check constraints. Unreachable or mode-degenerate
/// orientations come back infeasible with a pseudo-check explaining why.
inline FeasibilityReport pose_feasible(const MechanismGeometry& g,
                                       const Orientation& o,
                                       const ConstraintParams& cp = {}) {
  IkSolution sol;
  try {
    sol = inverse_kinematics(g, o, g.home.mode);
  } catch (const std::runtime_error& e) {
    FeasibilityReport rep;
    rep.feasible = false;
    rep.checks.push_back(ConstraintCheck{std::string("closure: ") + e.what(),
                                         0.0, 0.0, -1.0, false});
    return rep;
  }
  return check_constraints(g, sol.joints, o, cp);
}

}  // namespace eelwrist

#endif  // EELWRIST_CONSTRAINTS_HPP
