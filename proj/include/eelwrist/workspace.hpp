#ifndef EELWRIST_WORKSPACE_HPP
#define EELWRIST_WORKSPACE_HPP

// Collision-free orientation workspace.
//
// The reachable-and-feasible orientation set is explored in tilt-and-torsion
// coordinates relative to the home orientation: a candidate
// (azimuth, tilt, torsion) maps to  R = R_home * Rz(az) Ry(tilt) Rz(tor-az).
// Fixing the torsion gives a 2-D slice, drawn in the polar embedding
// (x, y) = tilt * (cos az, sin az). Each slice boundary is found by casting
// n_phi rays from a running center point, marching outward in tilt_step
// increments until feasibility fails, then bisecting the crossing down to
// tilt_step/100. The slice's area centroid seeds the center of the next
// slice (the feasible region drifts as torsion grows), and the sweep runs
// torsion upward from 0 and downward from 0 until a slice collapses to a
// point or the +-180 deg torsion limit is hit.
//
// Ray marching assumes slices are star-shaped about the running center; a
// deterministic validation pass re-tests three interior points per ray and
// counts violations instead of hiding them.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "constraints.hpp"
#include "geometry.hpp"
#include "kinematics.hpp"
#include "orientation.hpp"

namespace eelwrist {

struct center_infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct empty_workspace_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CentroidMode {
  area,            ///< polygon area centroid (default)
  vertex_average,  ///< arithmetic mean of the boundary vertices
};

struct SweepParams {
  /// Number of torsion steps over [-180 deg, +180 deg]; the slice spacing
  /// is 360 deg / n_psi. Must be even and >= 2.
  int n_psi = 40;
  /// Rays per slice (>= 3).
  int n_phi = 72;
  /// March increment in the polar embedding (radians of tilt).
  double tilt_step = deg_to_rad(0.5);
  /// Tilt search cap (radians, <= pi).
  double max_tilt = deg_to_rad(90.0);
  /// Boundary crossings are bisected down to tilt_step / refine_div.
  double refine_div = 100.0;
  CentroidMode centroid_mode = CentroidMode::area;

  double torsion_step() const { return 2.0 * kPi / n_psi; }
  void validate() const {
    if (n_psi < 2 || n_psi % 2 != 0)
      throw std::invalid_argument("n_psi must be an even integer >= 2");
    if (n_phi < 3) throw std::invalid_argument("n_phi must be >= 3");
    if (!(tilt_step > 0.0) || !(tilt_step <= max_tilt) || !(max_tilt <= kPi))
      throw std::invalid_argument("require 0 < tilt_step <= max_tilt <= pi");
    if (!(refine_div >= 1.0))
      throw std::invalid_argument("refine_div must be >= 1");
  }
};

struct BoundaryPoint {
  double azimuth = 0.0;  ///< polar angle of the boundary point (radians)
  double tilt = 0.0;     ///< polar radius of the boundary point (radians)
  JointAngles joints;    ///< home-mode inverse solution at the boundary
  double x() const { return tilt * std::cos(azimuth); }
  double y() const { return tilt * std::sin(azimuth); }
};

struct WorkspaceSlice {
  double torsion = 0.0;
  std::vector<BoundaryPoint> boundary;  ///< n_phi points, ray order
  double azimuth_c = 0.0;  ///< centroid, polar form
  double tilt_c = 0.0;
  double area = 0.0;  ///< polygon area in the embedding (radians^2)
  double centroid_x() const { return tilt_c * std::cos(azimuth_c); }
  double centroid_y() const { return tilt_c * std::sin(azimuth_c); }
  double max_tilt() const {
    double m = 0.0;
    for (const auto& b : boundary) m = std::max(m, b.tilt);
    return m;
  }
};

/// Per-joint extremes seen across all feasible evaluations of a sweep.
/// t3 is reported relative to its home angle (the motor's own coordinate);
/// t1 and t2 are zero at home already.
struct JointExtents {
  double t1_min = std::numeric_limits<double>::infinity();
  double t1_max = -std::numeric_limits<double>::infinity();
  double t2_min = std::numeric_limits<double>::infinity();
  double t2_max = -std::numeric_limits<double>::infinity();
  double t3_min = std::numeric_limits<double>::infinity();
  double t3_max = -std::numeric_limits<double>::infinity();

  void absorb(const JointAngles& q, double t3_home) {
    t1_min = std::min(t1_min, q.t1);
    t1_max = std::max(t1_max, q.t1);
    t2_min = std::min(t2_min, q.t2);
    t2_max = std::max(t2_max, q.t2);
    double rel = wrap_pi(q.t3 - t3_home);
    t3_min = std::min(t3_min, rel);
    t3_max = std::max(t3_max, rel);
  }
  void merge(const JointExtents& o) {
    t1_min = std::min(t1_min, o.t1_min);
    t1_max = std::max(t1_max, o.t1_max);
    t2_min = std::min(t2_min, o.t2_min);
    t2_max = std::max(t2_max, o.t2_max);
    t3_min = std::min(t3_min, o.t3_min);
    t3_max = std::max(t3_max, o.t3_max);
  }
  bool valid() const { return t1_min <= t1_max; }
};

struct StarViolation {
  double torsion = 0.0;
  int ray = 0;
  double fraction = 0.0;  ///< position along the ray that failed re-testing
};

struct WorkspaceMap {
  std::vector<WorkspaceSlice> upper;  ///< torsion 0, +step, +2 step, ...
  std::vector<WorkspaceSlice> lower;  ///< torsion -step, -2 step, ...
  SweepParams params;
  ConstraintParams constraints;
  DesignVariant variant = DesignVariant::parallel_actuators;
  JointExtents joint_extents;
  double torsion_min = 0.0;
  double torsion_max = 0.0;
  long feasibility_evals = 0;
  long star_violations = 0;
  std::vector<StarViolation> star_log;  ///< first 100 violations
  double seconds = 0.0;

  /// All slices ordered by descending torsion (+max first), so the
  /// embedding's z ladder  z_i = torsion_max - i * step  equals each row's
  /// actual torsion.
  std::vector<const WorkspaceSlice*> rows() const {
    std::vector<const WorkspaceSlice*> r;
    for (auto it = upper.rbegin(); it != upper.rend(); ++it) r.push_back(&*it);
    for (const auto& s : lower) r.push_back(&s);
    return r;
  }
};

namespace detail {

/// Home-working-mode feasibility probe; returns the inverse solution when
/// the pose closes in the home mode and passes every constraint.
inline std::optional<IkSolution> feasible_probe(const MechanismGeometry& g,
                                               const Orientation& o,
                                               const ConstraintParams& cp) {
  IkSolutionSet set = inverse_kinematics_all(g, o);
  if (!set.leg_reachable[0] || !set.leg_reachable[1]) return std::nullopt;
  if (set.double_root[0] || set.double_root[1]) return std::nullopt;
  const IkSolution* pick = nullptr;
  for (const IkSolution& s : set.solutions)
    if (s.mode.s1 == g.home.mode.s1 && s.mode.s2 == g.home.mode.s2) pick = &s;
  if (pick == nullptr) return std::nullopt;
  if (!check_constraints(g, pick->joints, o, cp).feasible) return std::nullopt;
  return *pick;
}

inline Orientation slice_orientation(const MechanismGeometry& g, double x,
                                     double y, double torsion) {
  double tilt = std::hypot(x, y);
  double az = (tilt < 1e-15) ? 0.0 : std::atan2(y, x);
  return g.home.orientation * tnt_to_orientation(az, tilt, torsion);
}

/// Deterministic per-(slice, ray) fractions for the star-shape re-test.
inline std::array<double, 3> star_fractions(int slice_idx, int ray) {
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  s ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(slice_idx) +
                                  0x10000) *
       0x2545f4914f6cdd1dull;
  s ^= static_cast<std::uint64_t>(ray + 1) * 0x9e3779b97f4a7c15ull;
  std::array<double, 3> out{};
  for (auto& f : out) {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    std::uint64_t r = s * 0x2545f4914f6cdd1dull;
    f = 0.05 + 0.9 * (static_cast<double>(r >> 11) * 0x1.0p-53);
  }
  return out;
}

}  // namespace detail

/// March one ray from the embedded center point (cx, cy) in direction
/// ray_angle; returns the refined boundary point. Throws
/// center_infeasible_error when the center pose itself fails.
inline BoundaryPoint boundary_ray(
    const MechanismGeometry& g, const ConstraintParams& cp,
    const SweepParams& sp, double torsion, double cx, double cy,
    double ray_angle,
    const std::function<void(const IkSolution&)>& on_feasible = {},
    long* evals = nullptr) {
  auto feasible = [&](double t, IkSolution* out) {
    double x = cx + t * std::cos(ray_angle);
    double y = cy + t * std::sin(ray_angle);
    if (std::hypot(x, y) > sp.max_tilt) return false;
    if (evals) ++*evals;
    auto sol =
        detail::feasible_probe(g, detail::slice_orientation(g, x, y, torsion), cp);
    if (!sol) return false;
    if (on_feasible) on_feasible(*sol);
    if (out) *out = *sol;
    return true;
  };
  IkSolution sol;
  if (!feasible(0.0, &sol))
    throw center_infeasible_error(
        "slice center pose is infeasible (torsion " +
        std::to_string(rad_to_deg(torsion)) + " deg)");
  double t_lo = 0.0;
  double t_hi = -1.0;
  // Outward march; 2*pi caps the ray even when max_tilt never triggers.
  for (double t = sp.tilt_step; t <= 2.0 * kPi; t += sp.tilt_step) {
    if (feasible(t, &sol)) {
      t_lo = t;
    } else {
      t_hi = t;
      break;
    }
  }
  if (t_hi > 0.0) {
    const double width = sp.tilt_step / sp.refine_div;
    IkSolution s2;
    while (t_hi - t_lo > width) {
      double mid = 0.5 * (t_lo + t_hi);
      if (feasible(mid, &s2)) {
        t_lo = mid;
        sol = s2;
      } else {
        t_hi = mid;
      }
    }
  }
  BoundaryPoint bp;
  double x = cx + t_lo * std::cos(ray_angle);
  double y = cy + t_lo * std::sin(ray_angle);
  bp.tilt = std::hypot(x, y);
  bp.azimuth = (bp.tilt < 1e-15) ? 0.0 : std::atan2(y, x);
  bp.joints = sol.joints;
  return bp;
}

/// Area (or vertex-average) centroid of a slice polygon in the embedding,
/// returned in polar form. Fewer than 3 distinct points degenerate to the
/// point itself.
inline void slice_centroid(WorkspaceSlice& s,
                           CentroidMode mode = CentroidMode::area) {
  const auto& b = s.boundary;
  double sx = 0.0, sy = 0.0;
  int distinct = 0;
  for (size_t j = 0; j < b.size(); ++j) {
    sx += b[j].x();
    sy += b[j].y();
    bool dup = false;
    for (size_t k = 0; k < j; ++k)
      if (std::hypot(b[j].x() - b[k].x(), b[j].y() - b[k].y()) < 1e-12)
        dup = true;
    if (!dup) ++distinct;
  }
  double a2 = 0.0, cx6 = 0.0, cy6 = 0.0;
  for (size_t j = 0; j < b.size(); ++j) {
    size_t k = (j + 1) % b.size();
    double cross = b[j].x() * b[k].y() - b[k].x() * b[j].y();
    a2 += cross;
    cx6 += (b[j].x() + b[k].x()) * cross;
    cy6 += (b[j].y() + b[k].y()) * cross;
  }
  s.area = 0.5 * std::abs(a2);
  double cx, cy;
  if (mode == CentroidMode::vertex_average || distinct < 3 ||
      std::abs(a2) < 1e-15) {
    cx = b.empty() ? 0.0 : sx / b.size();
    cy = b.empty() ? 0.0 : sy / b.size();
  } else {
    cx = cx6 / (3.0 * a2);
    cy = cy6 / (3.0 * a2);
  }
  s.tilt_c = std::hypot(cx, cy);
  s.azimuth_c = (s.tilt_c < 1e-15) ? 0.0 : std::atan2(cy, cx);
}

/// Full two-pass torsion sweep. threads > 1 parallelizes the rays within
/// each slice; results are merged by ray index, so the map is identical to
/// the serial one.
inline WorkspaceMap sweep_workspace(const MechanismGeometry& g,
                                    const ConstraintParams& cp = {},
                                    const SweepParams& sp = {},
                                    int threads = 1) {
  sp.validate();
  auto t0 = std::chrono::steady_clock::now();
  WorkspaceMap map;
  map.params = sp;
  map.constraints = cp;
  map.variant = g.variant;

  if (!detail::feasible_probe(g, g.home.orientation, cp))
    throw empty_workspace_error(
        "the home pose itself violates the constraints; nothing to sweep");

  const double step = sp.torsion_step();
  std::atomic<long> evals{0};
  long violations = 0;

  // Computes one slice; returns nullopt when its center is infeasible.
  auto compute_slice = [&](int slice_idx, double torsion, double cx,
                           double cy) -> std::optional<WorkspaceSlice> {
    ++evals;
    if (!detail::feasible_probe(
            g, detail::slice_orientation(g, cx, cy, torsion), cp))
      return std::nullopt;
    WorkspaceSlice slice;
    slice.torsion = torsion;
    slice.boundary.resize(sp.n_phi);
    std::vector<JointExtents> ext(std::max(1, threads));
    std::vector<long> ray_evals(sp.n_phi, 0);
    std::vector<std::vector<double>> ray_viol(sp.n_phi);

    auto do_ray = [&](int j, int tid) {
      double ang = 2.0 * kPi * j / sp.n_phi;
      auto recorder = [&](const IkSolution& s) {
        ext[tid].absorb(s.joints, g.home.joints.t3);
      };
      slice.boundary[j] = boundary_ray(g, cp, sp, torsion, cx, cy, ang,
                                       recorder, &ray_evals[j]);
      // Star-shape re-test at three deterministic interior fractions.
      double bx = slice.boundary[j].x(), by = slice.boundary[j].y();
      for (double f : detail::star_fractions(slice_idx, j)) {
        double x = cx + f * (bx - cx), y = cy + f * (by - cy);
        ++ray_evals[j];
        if (!detail::feasible_probe(
                g, detail::slice_orientation(g, x, y, torsion), cp))
          ray_viol[j].push_back(f);
      }
    };

    if (threads <= 1) {
      for (int j = 0; j < sp.n_phi; ++j) do_ray(j, 0);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      for (int tid = 0; tid < threads; ++tid)
        pool.emplace_back([&, tid] {
          for (int j = next.fetch_add(1); j < sp.n_phi;
               j = next.fetch_add(1))
            do_ray(j, tid);
        });
      for (auto& th : pool) th.join();
    }
    for (const auto& e : ext) map.joint_extents.merge(e);
    for (int j = 0; j < sp.n_phi; ++j) {
      evals += ray_evals[j];
      for (double f : ray_viol[j]) {
        ++violations;
        if (map.star_log.size() < 100)
          map.star_log.push_back(StarViolation{torsion, j, f});
      }
    }
    slice_centroid(slice, sp.centroid_mode);
    return slice;
  };

  // One pass: torsion 0, +-step, +-2 step, ... until collapse or +-180 deg.
  auto run_pass = [&](int dir, std::vector<WorkspaceSlice>& out) {
    double cx = 0.0, cy = 0.0;
    int idx = 0;
    for (double torsion = (dir > 0) ? 0.0 : -step;
         torsion <= kPi + 1e-12 && torsion >= -kPi - 1e-12;
         torsion += dir * step, ++idx) {
      std::optional<WorkspaceSlice> slice =
          compute_slice(dir > 0 ? idx : -1 - idx, torsion, cx, cy);
      if (!slice) break;  // center infeasible: the region has closed off
      bool collapsed = slice->max_tilt() < sp.tilt_step;
      out.push_back(std::move(*slice));
      cx = out.back().centroid_x();
      cy = out.back().centroid_y();
      if (collapsed) break;
    }
  };
  run_pass(+1, map.upper);
  run_pass(-1, map.lower);
  if (map.upper.empty())
    throw empty_workspace_error("no feasible slice at torsion 0");

  map.torsion_max = map.upper.back().torsion;
  map.torsion_min = map.lower.empty() ? 0.0 : map.lower.back().torsion;
  map.feasibility_evals = evals.load();
  map.star_violations = violations;
  map.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return map;
}

struct EmbeddedPoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Polar embedding of every slice, rows ordered by descending torsion so
/// z = torsion_max - row * torsion_step holds exactly.
inline std::vector<std::vector<EmbeddedPoint>> embed_polar(
    const WorkspaceMap& map) {
  std::vector<std::vector<EmbeddedPoint>> rows;
  for (const WorkspaceSlice* s : map.rows()) {
    std::vector<EmbeddedPoint> row;
    row.reserve(s->boundary.size());
    for (const auto& b : s->boundary)
      row.push_back(EmbeddedPoint{b.x(), b.y(), s->torsion});
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Boundary joints of every slice (row ordering of embed_polar). A positive
/// offset moves each point inward along the estimated outward normal of the
/// joint-space surface, leaving a safety margin.
inline std::vector<JointAngles> joint_space_cloud(const WorkspaceMap& map,
                                                  double offset = 0.0) {
  std::vector<const WorkspaceSlice*> rows = map.rows();
  std::vector<JointAngles> cloud;
  if (rows.empty()) return cloud;
  const int nphi = static_cast<int>(rows.front()->boundary.size());
  auto at = [&](int i, int j) {
    const JointAngles& q = rows[i]->boundary[(j % nphi + nphi) % nphi].joints;
    return Vec3(q.t1, q.t2, q.t3);
  };
  Vec3 mean = Vec3::Zero();
  long count = 0;
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < nphi; ++j) {
      mean += at(static_cast<int>(i), j);
      ++count;
    }
  if (count > 0) mean /= static_cast<double>(count);

  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < nphi; ++j) {
      Vec3 p = at(static_cast<int>(i), j);
      Vec3 q = p;
      if (offset != 0.0) {
        Vec3 du = at(static_cast<int>(i), j + 1) - at(static_cast<int>(i), j - 1);
        Vec3 dv;
        if (rows.size() == 1) {
          dv = Vec3::Zero();
        } else if (i == 0) {
          dv = at(1, j) - at(0, j);
        } else if (i + 1 == rows.size()) {
          dv = at(static_cast<int>(i), j) - at(static_cast<int>(i) - 1, j);
        } else {
          dv = at(static_cast<int>(i) + 1, j) - at(static_cast<int>(i) - 1, j);
        }
        Vec3 n = du.cross(dv);
        if (n.norm() > 1e-12) {
          n.normalize();
          if (n.dot(p - mean) < 0.0) n = -n;
          q = p - offset * n;
        }
      }
      cloud.push_back(JointAngles{q.x(), q.y(), q.z()});
    }
  }
  return cloud;
}

struct TargetFailure {
  double yaw = 0.0, pitch = 0.0, roll = 0.0;  ///< body angles (radians)
  double worst_margin = 0.0;
  std::vector<std::string> violated;  ///< failed constraint identifiers
};

struct TargetReport {
  int total = 0;
  int feasible = 0;
  double fraction = 0.0;
  std::vector<TargetFailure> failures;
  std::optional<TargetFailure> worst;  ///< most negative margin overall
};

/// Feasibility of the body-motion target box. Yaw is the body's lateral
/// bending about the fixed x axis (the mechanism's amplified direction),
/// pitch bends about the fixed y axis, roll twists about the body's long
/// axis z; each is applied as a world rotation on top of the home
/// orientation:  R = Rx(yaw) Ry(pitch) Rz(roll) R_home.
inline TargetReport check_design_targets(const MechanismGeometry& g,
                                         const ConstraintParams& cp,
                                         double yaw_half, double pitch_half,
                                         double roll_half,
                                         int n_per_axis = 11) {
  if (yaw_half < 0 || pitch_half < 0 || roll_half < 0)
    throw std::invalid_argument("target half-ranges must be non-negative");
  if (n_per_axis < 1) throw std::invalid_argument("grid size must be >= 1");
  auto axis_values = [&](double half) {
    std::vector<double> v;
    if (n_per_axis == 1 || half == 0.0) {
      v.push_back(0.0);
      return v;
    }
    for (int i = 0; i < n_per_axis; ++i)
      v.push_back(-half + 2.0 * half * i / (n_per_axis - 1));
    return v;
  };
  TargetReport rep;
  for (double yw : axis_values(yaw_half)) {
    for (double pt : axis_values(pitch_half)) {
      for (double rl : axis_values(roll_half)) {
        ++rep.total;
        Orientation o =
            Orientation::from_matrix(rot_x(yw) * rot_y(pt) * rot_z(rl)) *
            g.home.orientation;
        FeasibilityReport fr = pose_feasible(g, o, cp);
        if (fr.feasible) {
          ++rep.feasible;
          continue;
        }
        TargetFailure fail;
        fail.yaw = yw;
        fail.pitch = pt;
        fail.roll = rl;
        fail.worst_margin = 0.0;
        for (const auto& c : fr.checks)
          if (!c.ok) {
            fail.violated.push_back(c.id);
            fail.worst_margin = std::min(fail.worst_margin, c.margin);
          }
        if (!rep.worst || fail.worst_margin < rep.worst->worst_margin)
          rep.worst = fail;
        rep.failures.push_back(std::move(fail));
      }
    }
  }
  rep.fraction = rep.total ? static_cast<double>(rep.feasible) / rep.total : 0.0;
  return rep;
}

}  // namespace eelwrist

#endif  // EELWRIST_WORKSPACE_HPP
