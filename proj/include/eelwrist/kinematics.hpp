#ifndef EELWRIST_KINEMATICS_HPP
#define EELWRIST_KINEMATICS_HPP

// Closed-form inverse and direct kinematics of the wrist.
//
// Every driving-leg closure reduces to one scalar equation
//     a cos(t) + b sin(t) = c
// solved through the tan-half-angle substitution, giving at most two roots
// per leg: up to four inverse solutions (two working modes per leg) and up
// to four direct solutions (a structurally spurious pitch = pi/2 pair plus
// a principal pair). Branch labels use the closure derivative:
//   - working mode  s_i = sign((l_i x r_i) . i_i)   (flips between roots)
//   - assembly sign     = sign((p2 x r2) . x'')     (roll-equation slope)
// Both vanish exactly at tangent (double-root) configurations, which are
// reported instead of guessed. Roots are accepted by polished closure
// residual, never by raw discriminant sign, so reach-boundary poses behave
// deterministically.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "orientation.hpp"

namespace eelwrist {

inline constexpr double kClosureResidualTol = 1e-9;
inline constexpr double kQuadraticLeadTol = 1e-12;
inline constexpr double kBranchSignTol = 1e-12;

struct unreachable_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct mode_vanished_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ambiguous_selection_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct no_convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Roots of a cos(t) + b sin(t) = c, with the closure slope at each root.
struct TrigRoots {
  double a = 0, b = 0, c = 0;
  /// Quarter discriminant a^2 + b^2 - c^2 of the tan-half quadratic;
  /// negative means the equation (hence the leg) is unreachable.
  double discriminant = 0;
  /// Leading tan-half coefficient (c + a) vanished; the quadratic
  /// degenerates to a linear factor and the t = pi blind spot is solved
  /// explicitly.
  bool near_singular_quadratic = false;
  /// The two roots coalesced (tangency); only one entry is stored.
  bool double_root = false;
  int count = 0;
  std::array<double, 2> t{0, 0};
  std::array<double, 2> slope{0, 0};  ///< f'(t) = -a sin t + b cos t
};

inline TrigRoots solve_trig(double a, double b, double c) {
  TrigRoots out;
  out.a = a;
  out.b = b;
  out.c = c;
  const double scale = std::max(1.0, std::abs(a) + std::abs(b) + std::abs(c));
  const double res_tol = kClosureResidualTol * scale;
  auto f = [&](double t) { return a * std::cos(t) + b * std::sin(t) - c; };
  auto fp = [&](double t) { return -a * std::sin(t) + b * std::cos(t); };

  std::vector<double> cand;
  const double lead = c + a;  // tan-half quadratic: lead R^2 - 2b R + (c - a)
  out.discriminant = a * a + b * b - c * c;
  if (std::abs(lead) <= kQuadraticLeadTol * scale) {
    out.near_singular_quadratic = true;
    if (std::abs(b) > kQuadraticLeadTol * scale)
      cand.push_back(2.0 * std::atan((c - a) / (2.0 * b)));
    cand.push_back(kPi);  // the substitution's blind spot; f(pi) = -lead
  } else {
    double disc = out.discriminant;
    // Clamp tiny negative discriminants: tangent poses must not flip to
    // "unreachable" on rounding luck. Residual acceptance below rejects
    // genuinely unreachable cases anyway.
    if (disc < 0.0 && disc > -kQuadraticLeadTol * scale * scale) disc = 0.0;
    if (disc >= 0.0) {
      const double rt = std::sqrt(disc);
      if (std::abs(b) > kQuadraticLeadTol * scale) {
        const double q = b + (b >= 0.0 ? rt : -rt);  // cancellation-safe
        cand.push_back(2.0 * std::atan(q / lead));
        cand.push_back(2.0 * std::atan((c - a) / q));
      } else {
        cand.push_back(2.0 * std::atan(rt / lead));
        cand.push_back(2.0 * std::atan(-rt / lead));
      }
    }
  }

  for (double t : cand) {
    // Guarded Newton polish, then accept by residual only.
    for (int it = 0; it < 3; ++it) {
      double ft = f(t), fpt = fp(t);
      if (std::abs(ft) <= 0.25 * res_tol) break;
      if (std::abs(fpt) < 1e-14 * scale) break;
      double tn = t - ft / fpt;
      if (std::abs(f(tn)) < std::abs(ft)) t = tn; else break;
    }
    if (std::abs(f(t)) > res_tol) continue;
    t = wrap_pi(t);
    bool dup = false;
    for (int k = 0; k < out.count; ++k)
      if (std::abs(wrap_pi(t - out.t[k])) < 1e-7) dup = true;
    if (dup) continue;
    if (out.count < 2) {
      out.t[out.count] = t;
      out.slope[out.count] = fp(t);
      ++out.count;
    }
  }
  if (out.count == 1 && out.discriminant <= kQuadraticLeadTol * scale * scale &&
      !out.near_singular_quadratic) {
    out.double_root = true;
    // A double root sits at an extremum of f, available in closed form as
    // atan2(+-b, +-a); snapping there fixes the O(sqrt(eps)) root error of
    // the quadratic path, so tangency witnesses ((l x r) . i etc.) come out
    // exactly zero instead of merely small.
    double t_hi = std::atan2(b, a);
    double t_lo = wrap_pi(t_hi + kPi);
    double best = (std::abs(f(t_hi)) <= std::abs(f(t_lo))) ? t_hi : t_lo;
    if (std::abs(f(best)) <= res_tol) {
      out.t[0] = best;
      out.slope[0] = fp(best);
    }
  }
  return out;
}

/// Closure equation coefficients for one driving leg at platform point c_w.
inline TrigRoots solve_leg_closure(const MechanismGeometry& g, int leg,
                                   const Vec3& c_w) {
  const Vec3& a_i = (leg == 1) ? g.a1 : g.a2;
  const Vec3& d_i = (leg == 1) ? g.d1 : g.d2;
  Vec3 e_i = (leg == 1) ? g.e1() : g.e2();
  Vec3 w = c_w - a_i;
  double L = g.rod_length;
  double a = 2.0 * L * d_i.dot(w);
  double b = 2.0 * L * e_i.dot(w);
  double c = w.squaredNorm() + L * L - g.coupler_length * g.coupler_length;
  return solve_trig(a, b, c);
}

}  // namespace detail

struct IkSolution {
  JointAngles joints;
  WorkingMode mode;
  std::array<double, 2> residuals{0, 0};  ///< closure defects, both legs
  std::array<double, 2> h{0, 0};      ///< (l_i x r_i) . i_i (B-matrix entries)
  std::array<double, 2> dot_lr{0, 0};  ///< l_i . r_i, reported for reference
};

struct IkSolutionSet {
  double yaw = 0.0;  ///< t3, read directly from the orientation
  std::vector<IkSolution> solutions;
  std::array<double, 2> discriminants{0, 0};
  std::array<bool, 2> leg_reachable{true, true};
  std::array<bool, 2> near_singular_quadratic{false, false};
  std::array<bool, 2> double_root{false, false};
};

/// All assembly branches of the inverse problem (up to four).
inline IkSolutionSet inverse_kinematics_all(const MechanismGeometry& g,
                                            const Orientation& o) {
  IkSolutionSet set;
  set.yaw = orientation_to_rpy(o).angles.yaw;
  Vec3 cw[2] = {o * g.c1_mobile, o * g.c2_mobile};
  detail::TrigRoots roots[2];
  for (int leg = 0; leg < 2; ++leg) {
    roots[leg] = detail::solve_leg_closure(g, leg + 1, cw[leg]);
    set.discriminants[leg] = roots[leg].discriminant;
    set.leg_reachable[leg] = roots[leg].count > 0;
    set.near_singular_quadratic[leg] = roots[leg].near_singular_quadratic;
    set.double_root[leg] = roots[leg].double_root;
  }
  if (!set.leg_reachable[0] || !set.leg_reachable[1]) return set;

  for (int k1 = 0; k1 < roots[0].count; ++k1) {
    for (int k2 = 0; k2 < roots[1].count; ++k2) {
      IkSolution s;
      s.joints = JointAngles{roots[0].t[k1], roots[1].t[k2], set.yaw};
      LegPoints p = leg_points(g, s.joints, o);
      double rho2 = g.coupler_length * g.coupler_length;
      s.residuals = {(p.c1 - p.b1).squaredNorm() - rho2,
                     (p.c2 - p.b2).squaredNorm() - rho2};
      Vec3 l1 = p.b1 - g.a1, r1 = p.c1 - p.b1;
      Vec3 l2 = p.b2 - g.a2, r2 = p.c2 - p.b2;
      s.h = {l1.cross(r1).dot(g.i1), l2.cross(r2).dot(g.i2)};
      s.dot_lr = {l1.dot(r1), l2.dot(r2)};
      // A coalesced (tangent) root has no meaningful elbow sign; report 0
      // so callers cannot mistake it for a selectable branch.
      s.mode.s1 = roots[0].double_root ? 0 : ((s.h[0] >= 0.0) ? +1 : -1);
      s.mode.s2 = roots[1].double_root ? 0 : ((s.h[1] >= 0.0) ? +1 : -1);
      set.solutions.push_back(s);
    }
  }
  return set;
}

/// The unique solution in a given working mode.
///
/// Throws unreachable_error if a leg cannot close, mode_vanished_error if
/// the requested leg branch is at its tangent boundary (the two roots have
/// coalesced and neither sign is meaningful).
inline IkSolution inverse_kinematics(const MechanismGeometry& g,
                                     const Orientation& o,
                                     const WorkingMode& mode) {
  IkSolutionSet set = inverse_kinematics_all(g, o);
  for (int leg = 0; leg < 2; ++leg)
    if (!set.leg_reachable[leg])
      throw unreachable_error("leg " + std::to_string(leg + 1) +
                              " cannot reach the requested orientation");
  for (int leg = 0; leg < 2; ++leg)
    if (set.double_root[leg])
      throw mode_vanished_error(
          "leg " + std::to_string(leg + 1) +
          " is at its tangent (serial-singular) boundary; working mode is "
          "undefined");
  const int want[2] = {mode.s1, mode.s2};
  const IkSolution* best = nullptr;
  for (const IkSolution& s : set.solutions) {
    if (s.mode.s1 == want[0] && s.mode.s2 == want[1]) {
      if (best != nullptr)
        throw ambiguous_selection_error(
            "multiple inverse solutions match the requested working mode");
      best = &s;
    }
  }
  if (best == nullptr)
    throw mode_vanished_error("no inverse solution in the requested mode");
  return *best;
}

enum class FkBranch {
  principal,  ///< the regular pitch root
  spurious,   ///< the actuation-independent pitch = pi/2 factor
};

struct FkSolution {
  Orientation orientation;
  RpyAngles rpy;
  FkBranch branch = FkBranch::principal;
  int roll_sign = +1;  ///< sign of the roll-equation slope at this root
  std::array<double, 2> residuals{0, 0};
  double r2_dot_p2 = 0.0;  ///< reported for reference; equal across branches
};

struct FkSolutionSet {
  std::vector<FkSolution> solutions;
  /// Principal pitch factor degenerated (its tan-half coefficient vanished);
  /// the pitch = pi limit branch was used.
  bool degenerate_linear_factor = false;
  double principal_pitch = 0.0;
  std::array<double, 2> roll_discriminants{0, 0};  ///< per pitch branch
};

/// All direct solutions (closed form; parallel_actuators only).
///
/// The pitch equation factors so that pitch = pi/2 is always a root
/// regardless of the actuated angles (the platform x-attachment then sits
/// at the center of the sphere traced by the rod tip); the remaining linear
/// factor yields the principal pitch. Each pitch admits up to two roll
/// roots, four solutions total.
inline FkSolutionSet direct_kinematics_all(const MechanismGeometry& g,
                                           const JointAngles& q) {
  if (g.variant != DesignVariant::parallel_actuators)
    throw invalid_geometry_error(
        "closed-form direct kinematics exists only for parallel_actuators");
  FkSolutionSet set;
  const double rho2 = g.coupler_length * g.coupler_length;
  Vec3 b1 = rod_tip(g, 1, q.t1);
  Vec3 b2 = rod_tip(g, 2, q.t2);
  Mat3 rz = rot_z(q.t3);

  // Pitch from leg 1: c1 = Rz(t3) (cos(pitch), 0, -sin(pitch)) is
  // roll-independent, so |c1 - b1|^2 = rho^2 is scalar in pitch alone.
  double a_p = b1.dot(rz * Vec3::UnitX());
  double b_p = -b1.z();
  double c_p = 0.5 * (b1.squaredNorm() + 1.0 - rho2);
  const double scale_p =
      std::max(1.0, std::abs(a_p) + std::abs(b_p) + std::abs(c_p));

  double principal_pitch;
  const double lead = c_p + a_p;
  if (std::abs(lead) <= kQuadraticLeadTol * scale_p) {
    set.degenerate_linear_factor = true;
    principal_pitch = kPi;  // tan-half root at infinity
  } else {
    principal_pitch = 2.0 * std::atan((c_p - a_p) / lead);
    // One Newton step against the full equation.
    double ft = a_p * std::cos(principal_pitch) +
                b_p * std::sin(principal_pitch) - c_p;
    double fpt = -a_p * std::sin(principal_pitch) +
                 b_p * std::cos(principal_pitch);
    if (std::abs(fpt) > 1e-14 * scale_p) principal_pitch -= ft / fpt;
  }
  set.principal_pitch = principal_pitch;

  struct Branch {
    double pitch;
    FkBranch tag;
  };
  std::vector<Branch> branches;
  branches.push_back({principal_pitch, FkBranch::principal});
  if (std::abs(wrap_pi(principal_pitch - kPi / 2.0)) > 1e-9)
    branches.push_back({kPi / 2.0, FkBranch::spurious});

  for (size_t ib = 0; ib < branches.size(); ++ib) {
    const Branch& br = branches[ib];
    Mat3 m = rz * rot_y(br.pitch);
    double a_r = b2.dot(m * Vec3::UnitY());
    double b_r = b2.dot(m * Vec3::UnitZ());
    double c_r = 0.5 * (b2.squaredNorm() + 1.0 - rho2);
    detail::TrigRoots rr = detail::solve_trig(a_r, b_r, c_r);
    set.roll_discriminants[br.tag == FkBranch::principal ? 0 : 1] =
        rr.discriminant;
    for (int k = 0; k < rr.count; ++k) {
      FkSolution s;
      s.rpy = RpyAngles{q.t3, br.pitch, rr.t[k]};
      s.orientation = rpy_to_orientation(s.rpy);
      s.branch = br.tag;
      // Roll-equation slope = -(p2 x r2) . x''; store the branch label in
      // the (p2 x r2) . x'' sign convention.
      s.roll_sign = (rr.slope[k] <= 0.0) ? +1 : -1;
      auto res = closure_residuals(g, q, s.orientation);
      s.residuals = {res[0], res[1]};
      LegPoints p = leg_points(g, q, s.orientation);
      s.r2_dot_p2 = (p.c2 - p.b2).dot(p.c2);
      if (std::abs(res[0]) <= kClosureResidualTol * scale_p &&
          std::abs(res[1]) <= kClosureResidualTol * scale_p)
        set.solutions.push_back(s);
    }
  }
  return set;
}

/// The principal-branch solution matching the geometry's recorded assembly
/// sign (the branch the mechanism is physically assembled in).
inline FkSolution direct_kinematics(const MechanismGeometry& g,
                                    const JointAngles& q) {
  FkSolutionSet set = direct_kinematics_all(g, q);
  const FkSolution* best = nullptr;
  int principal_count = 0;
  bool tangent = false;
  for (const FkSolution& s : set.solutions) {
    if (s.branch != FkBranch::principal) continue;
    ++principal_count;
    if (s.roll_sign == g.home.assembly_sign) {
      if (best != nullptr) tangent = true;
      best = &s;
    }
  }
  if (principal_count == 0)
    throw unreachable_error(
        "the platform does not assemble at the requested joint angles");
  if (tangent || (best == nullptr && principal_count == 1))
    throw ambiguous_selection_error(
        "roll branches coalesced; assembly sign cannot select a solution");
  if (best == nullptr)
    throw unreachable_error("no solution in the recorded assembly branch");
  return *best;
}

struct NumericFkResult {
  Orientation orientation;
  RpyAngles rpy;
  int iterations = 0;
  std::array<double, 2> residuals{0, 0};
};

/// Damped-Newton direct kinematics over (pitch, roll) with yaw = t3 fixed.
/// Works for every variant; converges to the branch nearest the seed
/// (default: the home pose). Guarantees residuals below 1e-10 in at most
/// 100 iterations, but keeps polishing to 1e-13 while steps still improve,
/// so finite-difference consumers see parameter noise near machine level.
inline NumericFkResult direct_kinematics_numeric(
    const MechanismGeometry& g, const JointAngles& q,
    std::optional<RpyAngles> seed = std::nullopt) {
  double pitch = seed ? seed->pitch : 0.0;
  double roll = seed ? seed->roll : 0.0;
  const double t3 = q.t3;
  Vec3 b1 = rod_tip(g, 1, q.t1);
  Vec3 b2 = rod_tip(g, 2, q.t2);
  const double rho2 = g.coupler_length * g.coupler_length;
  Mat3 rz = rot_z(t3);

  auto residual = [&](double p, double r, Vec3* c1o = nullptr,
                      Vec3* c2o = nullptr) {
    Mat3 m = rz * rot_y(p) * rot_x(r);
    Vec3 c1 = m * g.c1_mobile, c2 = m * g.c2_mobile;
    if (c1o) *c1o = c1;
    if (c2o) *c2o = c2;
    return Eigen::Vector2d((c1 - b1).squaredNorm() - rho2,
                           (c2 - b2).squaredNorm() - rho2);
  };

  Eigen::Vector2d f = residual(pitch, roll);
  int it = 0;
  for (; it < 100; ++it) {
    if (f.cwiseAbs().maxCoeff() <= 1e-13) break;
    // Analytic partials: dC/dpitch, dC/droll through the factored rotation.
    Mat3 dry, drx;
    double cp = std::cos(pitch), sp = std::sin(pitch);
    double cr = std::cos(roll), sr = std::sin(roll);
    dry << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
    drx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
    Vec3 c1, c2;
    residual(pitch, roll, &c1, &c2);
    Vec3 dc1_dp = rz * dry * rot_x(roll) * g.c1_mobile;
    Vec3 dc2_dp = rz * dry * rot_x(roll) * g.c2_mobile;
    Vec3 dc2_dr = rz * rot_y(pitch) * drx * g.c2_mobile;
    Vec3 dc1_dr = rz * rot_y(pitch) * drx * g.c1_mobile;
    Eigen::Matrix2d jac;
    jac << 2.0 * (c1 - b1).dot(dc1_dp), 2.0 * (c1 - b1).dot(dc1_dr),
        2.0 * (c2 - b2).dot(dc2_dp), 2.0 * (c2 - b2).dot(dc2_dr);
    if (std::abs(jac.determinant()) < 1e-14)
      throw no_convergence_error(
          "numeric direct kinematics hit a singular closure Jacobian");
    Eigen::Vector2d step = jac.colPivHouseholderQr().solve(-f);
    double lambda = 1.0;
    bool moved = false;
    for (int half = 0; half < 25; ++half) {
      Eigen::Vector2d fn =
          residual(pitch + lambda * step.x(), roll + lambda * step.y());
      if (fn.norm() < f.norm()) {
        pitch += lambda * step.x();
        roll += lambda * step.y();
        f = fn;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) {
      // The damped search hit its numeric floor. Only a floor above the
      // documented guarantee is an error.
      if (f.cwiseAbs().maxCoeff() <= 1e-10) break;
      throw no_convergence_error(
          "numeric direct kinematics stalled (step halving exhausted)");
    }
  }
  if (f.cwiseAbs().maxCoeff() > 1e-10)
    throw no_convergence_error(
        "numeric direct kinematics did not reach the residual target in 100 "
        "iterations");
  NumericFkResult out;
  out.rpy = RpyAngles{t3, wrap_pi(pitch), wrap_pi(roll)};
  out.orientation = rpy_to_orientation(out.rpy);
  out.iterations = it;
  out.residuals = {f.x(), f.y()};
  return out;
}

/// Re-derives the home pose for a customized geometry: solves the inverse
/// problem at Rz(pi/4) and records the branch nearest zero joint angles.
inline void recompute_home(MechanismGeometry& g) {
  Orientation ho = rpy_to_orientation(kPi / 4.0, 0.0, 0.0);
  IkSolutionSet set = inverse_kinematics_all(g, ho);
  if (set.solutions.empty())
    throw unreachable_error("geometry cannot close at the home orientation");
  const IkSolution* best = nullptr;
  double best_n = 0.0;
  for (const IkSolution& s : set.solutions) {
    double n = std::hypot(s.joints.t1, s.joints.t2);
    if (!best || n < best_n) {
      best = &s;
      best_n = n;
    }
  }
  g.home.joints = best->joints;
  g.home.orientation = ho;
  g.home.mode = best->mode;
  g.home.assembly_sign = +1;
}

}  // namespace eelwrist

#endif  // EELWRIST_KINEMATICS_HPP
