// Command-line front end for the eel wrist kinematics toolkit.
//
// Subcommands: fk, ik, jac, check, singular-scan, workspace, jointspace,
// targets, calibrate. Angles are degrees on the command line by default
// (switchable with --radians); the library works in radians throughout.
//
// Exit codes: 0 success, 2 domain failures (unreachable pose, vanished
// working mode, empty workspace, ...), 1 usage/config errors.

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eelwrist/eelwrist.hpp"

namespace ew = eelwrist;
using ew::json;

namespace {

struct Units {
  bool degrees = true;
  double in(double v) const { return degrees ? ew::deg_to_rad(v) : v; }
  double out(double v) const { return degrees ? ew::rad_to_deg(v) : v; }
  const char* name() const { return degrees ? "degrees" : "radians"; }
};

/// Options shared by every subcommand.
struct Common {
  std::string variant;      // empty: keep config/default geometry
  std::string config_path;  // optional RunConfig JSON
  bool radians = false;
  bool force_degrees = false;

  ew::RunConfig rc;
  Units units;

  void resolve() {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ew::config_error("cannot open config: " + config_path);
      json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw ew::config_error("config parse error: " + std::string(e.what()));
      }
      rc = ew::config_from_json(j);
    }
    if (!variant.empty())
      rc.geometry = ew::make_geometry(ew::variant_from_string(variant));
    units.degrees = rc.degrees;
    if (radians) units.degrees = false;
    if (force_degrees) units.degrees = true;
  }

  const ew::MechanismGeometry& geom() const { return rc.geometry; }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--variant", c.variant,
                  "design variant: parallel-axes, orthogonal-axes, "
                  "parallel-actuators (default)");
  sub->add_option("--config", c.config_path, "run configuration JSON file");
  sub->add_flag("--radians", c.radians, "angles in radians on the CLI");
  sub->add_flag("--degrees", c.force_degrees,
                "angles in degrees on the CLI (overrides config units)");
}

json mat_to_json(const ew::Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

json rpy_to_json(const ew::RpyAngles& r, const Units& u) {
  return {{"yaw", u.out(r.yaw)}, {"pitch", u.out(r.pitch)},
          {"roll", u.out(r.roll)}};
}

json tnt_to_json(const ew::TiltTorsion& t, const Units& u) {
  return {{"azimuth", u.out(t.azimuth)}, {"tilt", u.out(t.tilt)},
          {"torsion", u.out(t.torsion)}};
}

std::string mode_string(const ew::WorkingMode& m) {
  auto sign = [](int s) { return s == 0 ? '0' : (s > 0 ? '+' : '-'); };
  return std::string{sign(m.s1), sign(m.s2)};
}

ew::WorkingMode mode_from_string(const std::string& s) {
  if (s.size() != 2 || (s[0] != '+' && s[0] != '-') ||
      (s[1] != '+' && s[1] != '-'))
    throw ew::config_error("--mode must be one of ++, +-, -+, --");
  return ew::WorkingMode{s[0] == '+' ? +1 : -1, s[1] == '+' ? +1 : -1};
}

void print_json(json j) {
  ew::json_round9(j);
  std::cout << j.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ew::config_error("cannot write " + path);
  out << text;
}

ew::JointAngles triple_to_joints(const std::vector<double>& v,
                                 const Units& u) {
  return ew::JointAngles{u.in(v[0]), u.in(v[1]), u.in(v[2])};
}

ew::Orientation orientation_from_flags(const std::vector<double>& rpy,
                                       const std::vector<double>& tnt,
                                       const std::vector<double>& tnt_home,
                                       const ew::MechanismGeometry& g,
                                       const Units& u) {
  if (!rpy.empty())
    return ew::rpy_to_orientation(u.in(rpy[0]), u.in(rpy[1]), u.in(rpy[2]));
  if (!tnt.empty())
    return ew::tnt_to_orientation(u.in(tnt[0]), u.in(tnt[1]), u.in(tnt[2]));
  if (!tnt_home.empty())
    return g.home.orientation *
           ew::tnt_to_orientation(u.in(tnt_home[0]), u.in(tnt_home[1]),
                                  u.in(tnt_home[2]));
  throw ew::config_error(
      "an orientation is required: --rpy, --tnt, or --tnt-home");
}

// ---------------------------------------------------------------------------

struct FkArgs {
  Common common;
  std::vector<double> q;
  bool all = false;
};

int run_fk(FkArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  const ew::MechanismGeometry& g = a.common.geom();
  ew::JointAngles q = triple_to_joints(a.q, u);

  json out;
  out["format"] = 1;
  out["command"] = "fk";
  out["units"] = u.name();
  out["variant"] = ew::to_string(g.variant);
  out["q"] = json::array({u.out(q.t1), u.out(q.t2), u.out(q.t3)});

  auto sol_json = [&](const ew::FkSolution& s) {
    json sj;
    sj["branch"] =
        s.branch == ew::FkBranch::principal ? "principal" : "spurious";
    sj["roll_sign"] = s.roll_sign;
    sj["rpy"] = rpy_to_json(s.rpy, u);
    sj["tilt_torsion"] = tnt_to_json(ew::orientation_to_tnt(s.orientation), u);
    sj["residuals"] = json::array({s.residuals[0], s.residuals[1]});
    sj["orientation"] = mat_to_json(s.orientation.matrix());
    return sj;
  };

  if (g.variant == ew::DesignVariant::parallel_actuators) {
    json sols = json::array();
    if (a.all) {
      ew::FkSolutionSet set = ew::direct_kinematics_all(g, q);
      for (const auto& s : set.solutions) sols.push_back(sol_json(s));
      out["principal_pitch"] = u.out(set.principal_pitch);
      out["degenerate_linear_factor"] = set.degenerate_linear_factor;
    } else {
      sols.push_back(sol_json(ew::direct_kinematics(g, q)));
    }
    out["method"] = "closed_form";
    out["solutions"] = sols;
    out["count"] = sols.size();
  } else {
    if (a.all)
      throw ew::config_error(
          "--all requires the parallel-actuators design; other variants use "
          "the numeric solver (single branch)");
    ew::NumericFkResult r = ew::direct_kinematics_numeric(g, q);
    json sj;
    sj["rpy"] = rpy_to_json(r.rpy, u);
    sj["tilt_torsion"] = tnt_to_json(ew::orientation_to_tnt(r.orientation), u);
    sj["residuals"] = json::array({r.residuals[0], r.residuals[1]});
    sj["iterations"] = r.iterations;
    sj["orientation"] = mat_to_json(r.orientation.matrix());
    out["method"] = "numeric";
    out["solutions"] = json::array({sj});
    out["count"] = 1;
  }
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

struct IkArgs {
  Common common;
  std::vector<double> rpy, tnt, tnt_home;
  bool all = false;
  std::string mode;
};

int run_ik(IkArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  const ew::MechanismGeometry& g = a.common.geom();
  ew::Orientation o = orientation_from_flags(a.rpy, a.tnt, a.tnt_home, g, u);

  json out;
  out["format"] = 1;
  out["command"] = "ik";
  out["units"] = u.name();
  out["variant"] = ew::to_string(g.variant);
  ew::RpyExtraction rx = ew::orientation_to_rpy(o);
  out["rpy"] = rpy_to_json(rx.angles, u);

  auto sol_json = [&](const ew::IkSolution& s) {
    json sj;
    sj["q"] = json::array(
        {u.out(s.joints.t1), u.out(s.joints.t2), u.out(s.joints.t3)});
    sj["mode"] = mode_string(s.mode);
    sj["residuals"] = json::array({s.residuals[0], s.residuals[1]});
    sj["h"] = json::array({s.h[0], s.h[1]});
    return sj;
  };

  json sols = json::array();
  if (a.all) {
    ew::IkSolutionSet set = ew::inverse_kinematics_all(g, o);
    for (const auto& s : set.solutions) sols.push_back(sol_json(s));
    out["leg_reachable"] =
        json::array({set.leg_reachable[0], set.leg_reachable[1]});
    out["discriminants"] =
        json::array({set.discriminants[0], set.discriminants[1]});
  } else {
    ew::WorkingMode m = a.mode.empty() ? g.home.mode : mode_from_string(a.mode);
    sols.push_back(sol_json(ew::inverse_kinematics(g, o, m)));
  }
  out["solutions"] = sols;
  out["count"] = sols.size();
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

struct JacArgs {
  Common common;
  std::vector<double> q, rpy;
  bool exact_yaw_row = false;
};

int run_jac(JacArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  const ew::MechanismGeometry& g = a.common.geom();

  if (a.q.empty() && a.rpy.empty())
    throw ew::config_error("jac needs --q, --rpy, or both");
  ew::JointAngles q;
  ew::Orientation o = ew::Orientation::identity();
  if (!a.q.empty() && !a.rpy.empty()) {
    q = triple_to_joints(a.q, u);
    o = ew::rpy_to_orientation(u.in(a.rpy[0]), u.in(a.rpy[1]), u.in(a.rpy[2]));
  } else if (!a.q.empty()) {
    q = triple_to_joints(a.q, u);
    if (g.variant == ew::DesignVariant::parallel_actuators)
      o = ew::direct_kinematics(g, q).orientation;
    else
      o = ew::direct_kinematics_numeric(g, q).orientation;
  } else {
    o = ew::rpy_to_orientation(u.in(a.rpy[0]), u.in(a.rpy[1]), u.in(a.rpy[2]));
    q = ew::inverse_kinematics(g, o, g.home.mode).joints;
  }

  ew::SingularityReport rep = ew::singularity_report(g, q, o);
  ew::JacobianPair jp = ew::jacobians(g, q, o, a.exact_yaw_row);

  json out;
  out["format"] = 1;
  out["command"] = "jac";
  out["units"] = u.name();
  out["variant"] = ew::to_string(g.variant);
  out["q"] = json::array({u.out(q.t1), u.out(q.t2), u.out(q.t3)});
  out["yaw_row"] = a.exact_yaw_row ? "exact" : "customary";
  out["A"] = mat_to_json(jp.A);
  out["B"] = mat_to_json(jp.B);
  try {
    out["J_inverse"] = mat_to_json(jp.j_inverse());
  } catch (const ew::singular_jacobian_error&) {
    out["J_inverse"] = nullptr;
  }
  out["det_A"] = rep.det_a;
  out["det_B"] = rep.det_b;
  auto cond_json = [](double c) {
    return std::isfinite(c) ? json(c) : json("inf");
  };
  out["cond_A"] = cond_json(rep.cond_a);
  out["cond_B"] = cond_json(rep.cond_b);
  out["serial_margin"] =
      json::array({rep.serial_margin[0], rep.serial_margin[1]});
  std::string kind;
  if (rep.serial[0] || rep.serial[1]) kind = "serial";
  if (rep.parallel) kind = kind.empty() ? "parallel" : "serial+parallel";
  if (kind.empty()) kind = "none";
  out["singularity"] = kind;
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  Common common;
  std::vector<double> rpy, tnt, tnt_home, q;
};

int run_check(CheckArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  const ew::MechanismGeometry& g = a.common.geom();
  const ew::ConstraintParams& cp = a.common.rc.constraints;

  json out;
  out["format"] = 1;
  out["command"] = "check";
  out["units"] = u.name();
  out["variant"] = ew::to_string(g.variant);

  ew::FeasibilityReport rep;
  if (!a.q.empty()) {
    ew::JointAngles q = triple_to_joints(a.q, u);
    ew::Orientation o =
        g.variant == ew::DesignVariant::parallel_actuators
            ? ew::direct_kinematics(g, q).orientation
            : ew::direct_kinematics_numeric(g, q).orientation;
    rep = ew::check_constraints(g, q, o, cp);
    out["q"] = json::array({u.out(q.t1), u.out(q.t2), u.out(q.t3)});
  } else {
    ew::Orientation o =
        orientation_from_flags(a.rpy, a.tnt, a.tnt_home, g, u);
    rep = ew::pose_feasible(g, o, cp);
    try {
      ew::IkSolution s = ew::inverse_kinematics(g, o, g.home.mode);
      out["q"] = json::array(
          {u.out(s.joints.t1), u.out(s.joints.t2), u.out(s.joints.t3)});
    } catch (const std::runtime_error&) {
      out["q"] = nullptr;
    }
  }

  out["feasible"] = rep.feasible;
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"id", c.id},
                      {"value", c.value},
                      {"limit", c.limit},
                      {"margin", c.margin},
                      {"ok", c.ok}});
  out["checks"] = checks;
  json cones = json::array();
  for (double c : rep.cone_angles) cones.push_back(u.out(c));
  out["cone_angles"] = cones;
  out["rod_rod"] = rep.rod_rod;
  out["rod_rod_sampled"] = rep.rod_rod_sampled;
  out["base_margin"] = json::array({rep.base_margin[0], rep.base_margin[1]});
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ScanArgs {
  Common common;
  double torsion = 0.0;
  double max_tilt = 90.0;
  int n_az = 72;
  int n_tilt = 90;
  std::string out_path;
};

int run_singular_scan(ScanArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  const ew::MechanismGeometry& g = a.common.geom();
  if (a.n_az < 1 || a.n_tilt < 1)
    throw ew::config_error("--n-az and --n-tilt must be positive");
  const double psi = u.in(a.torsion);
  const double tmax = u.in(a.max_tilt);

  std::string csv =
      "azimuth_deg,tilt_deg,x,y,det_a,det_b,h1,h2,reachable\n";
  for (int ia = 0; ia < a.n_az; ++ia) {
    double az = 2.0 * ew::kPi * ia / a.n_az;
    for (int it = 0; it <= a.n_tilt; ++it) {
      double tilt = tmax * it / a.n_tilt;
      double x = tilt * std::cos(az), y = tilt * std::sin(az);
      ew::Orientation o = ew::detail::slice_orientation(g, x, y, psi);
      double det_a = std::nan(""), det_b = std::nan("");
      double h1 = std::nan(""), h2 = std::nan("");
      int reach = 0;
      try {
        ew::IkSolution s = ew::inverse_kinematics(g, o, g.home.mode);
        ew::SingularityReport rep = ew::singularity_report(g, s.joints, o);
        det_a = rep.det_a;
        det_b = rep.det_b;
        h1 = s.h[0];
        h2 = s.h[1];
        reach = 1;
      } catch (const std::runtime_error&) {
      }
      csv += ew::fmt9(ew::rad_to_deg(az)) + "," +
             ew::fmt9(ew::rad_to_deg(tilt)) + "," +
             ew::fmt9(ew::rad_to_deg(x)) + "," + ew::fmt9(ew::rad_to_deg(y)) +
             "," + ew::fmt9(det_a) + "," + ew::fmt9(det_b) + "," +
             ew::fmt9(h1) + "," + ew::fmt9(h2) + "," + std::to_string(reach) +
             "\n";
    }
  }
  if (a.out_path.empty())
    std::cout << csv;
  else {
    write_text(a.out_path, csv);
    print_json(json{{"format", 1},
                    {"command", "singular-scan"},
                    {"rows", a.n_az * (a.n_tilt + 1)},
                    {"output", a.out_path}});
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  Common common;
  int n_psi = -1, n_phi = -1;
  double tilt_step = -1.0, max_tilt = -1.0, refine_div = -1.0;
  int threads = 1;

  ew::SweepParams params(const Units& u, const ew::RunConfig& rc) const {
    ew::SweepParams sp = rc.sweep;
    if (n_psi > 0) sp.n_psi = n_psi;
    if (n_phi > 0) sp.n_phi = n_phi;
    if (tilt_step > 0) sp.tilt_step = u.in(tilt_step);
    if (max_tilt > 0) sp.max_tilt = u.in(max_tilt);
    if (refine_div > 0) sp.refine_div = refine_div;
    sp.validate();
    return sp;
  }
};

void add_sweep_options(CLI::App* sub, SweepArgs& a) {
  sub->add_option("--n-psi", a.n_psi, "torsion steps over the full turn");
  sub->add_option("--n-phi", a.n_phi, "boundary rays per slice");
  sub->add_option("--tilt-step", a.tilt_step, "coarse tilt march step");
  sub->add_option("--max-tilt", a.max_tilt, "tilt search cap");
  sub->add_option("--refine-div", a.refine_div,
                  "bisection refinement divisor (final width = step/div)");
  sub->add_option("--threads", a.threads,
                  "worker threads for the sweep (1 = serial reference)");
}

json sweep_summary(const ew::WorkspaceMap& map) {
  json out;
  out["format"] = 1;
  out["torsion_extent_deg"] = json::array(
      {ew::rad_to_deg(map.torsion_min), ew::rad_to_deg(map.torsion_max)});
  if (map.joint_extents.valid()) {
    const auto& e = map.joint_extents;
    out["joint_extents_deg"] = {
        {"t1",
         json::array({ew::rad_to_deg(e.t1_min), ew::rad_to_deg(e.t1_max)})},
        {"t2",
         json::array({ew::rad_to_deg(e.t2_min), ew::rad_to_deg(e.t2_max)})},
        {"t3_rel",
         json::array({ew::rad_to_deg(e.t3_min), ew::rad_to_deg(e.t3_max)})}};
  }
  out["slices"] = map.upper.size() + map.lower.size();
  json areas = json::array();
  for (const ew::WorkspaceSlice* s : map.rows())
    areas.push_back(
        json::array({ew::rad_to_deg(s->torsion), s->area}));
  out["slice_areas"] = areas;
  out["feasibility_evals"] = map.feasibility_evals;
  out["star_violations"] = map.star_violations;
  return out;
}

struct WorkspaceArgs {
  SweepArgs sweep;
  std::string format;  // csv | json | obj (default from config)
  std::string out_path;
  bool with_jointspace = false;
};

int run_workspace(WorkspaceArgs& a) {
  a.sweep.common.resolve();
  const Units& u = a.sweep.common.units;
  const ew::RunConfig& rc = a.sweep.common.rc;
  const ew::MechanismGeometry& g = a.sweep.common.geom();
  ew::SweepParams sp = a.sweep.params(u, rc);
  std::string format = a.format.empty() ? rc.output_format : a.format;
  if (format != "csv" && format != "json" && format != "obj")
    throw ew::config_error("--format must be csv, json, or obj");
  if (a.with_jointspace && a.out_path.empty())
    throw ew::config_error("--jointspace needs --out to name the files");

  ew::WorkspaceMap map =
      ew::sweep_workspace(g, rc.constraints, sp, a.sweep.threads);

  std::string payload;
  if (format == "csv")
    payload = ew::workspace_csv(map);
  else if (format == "obj")
    payload = ew::workspace_obj(map);
  else {
    payload = ew::workspace_to_json(map).dump(2);
    payload += "\n";
  }

  if (a.out_path.empty()) {
    std::cout << payload;
    return 0;
  }
  write_text(a.out_path, payload);
  json summary = sweep_summary(map);
  summary["command"] = "workspace";
  json outputs = json::array({a.out_path});
  if (a.with_jointspace) {
    std::string jpath = a.out_path;
    size_t dot = jpath.find_last_of('.');
    if (dot != std::string::npos) jpath.resize(dot);
    jpath += "_jointspace.obj";
    write_text(jpath, ew::jointspace_obj(map));
    outputs.push_back(jpath);
  }
  summary["outputs"] = outputs;
  print_json(summary);
  return 0;
}

// ---------------------------------------------------------------------------

struct JointspaceArgs {
  SweepArgs sweep;
  double offset = 0.0;
  std::string out_path;
};

int run_jointspace(JointspaceArgs& a) {
  a.sweep.common.resolve();
  const Units& u = a.sweep.common.units;
  const ew::RunConfig& rc = a.sweep.common.rc;
  ew::SweepParams sp = a.sweep.params(u, rc);
  ew::WorkspaceMap map = ew::sweep_workspace(a.sweep.common.geom(),
                                             rc.constraints, sp,
                                             a.sweep.threads);
  std::string obj = ew::jointspace_obj(map, u.in(a.offset));
  if (a.out_path.empty()) {
    std::cout << obj;
  } else {
    write_text(a.out_path, obj);
    json summary = sweep_summary(map);
    summary["command"] = "jointspace";
    summary["offset"] = u.out(u.in(a.offset));
    summary["outputs"] = json::array({a.out_path});
    print_json(summary);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TargetsArgs {
  Common common;
  double yaw = 30.0, pitch = 15.0, roll = 4.0;
  int n = 11;
  int max_failures = 20;
};

int run_targets(TargetsArgs& a) {
  a.common.resolve();
  const Units& u = a.common.units;
  ew::TargetReport rep = ew::check_design_targets(
      a.common.geom(), a.common.rc.constraints, u.in(a.yaw), u.in(a.pitch),
      u.in(a.roll), a.n);
  json out;
  out["format"] = 1;
  out["command"] = "targets";
  out["units"] = u.name();
  out["half_range"] = {{"yaw", u.out(u.in(a.yaw))},
                       {"pitch", u.out(u.in(a.pitch))},
                       {"roll", u.out(u.in(a.roll))}};
  out["grid_per_axis"] = a.n;
  out["total"] = rep.total;
  out["feasible"] = rep.feasible;
  out["fraction"] = rep.fraction;
  out["failure_count"] = rep.failures.size();
  json fails = json::array();
  int shown = 0;
  for (const auto& f : rep.failures) {
    if (shown++ >= a.max_failures) break;
    json violated = json::array();
    for (const auto& id : f.violated) violated.push_back(id);
    fails.push_back({{"yaw", u.out(f.yaw)},
                     {"pitch", u.out(f.pitch)},
                     {"roll", u.out(f.roll)},
                     {"worst_margin", f.worst_margin},
                     {"violated", violated}});
  }
  out["failures"] = fails;
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  Common common;
  double t1_floor = -17.0;  // degrees (the published actuator floor)
  double t1_ceil = 38.0;    // degrees (the published actuator ceiling)
  double lima_lo = 25.0, lima_hi = 45.0;
  bool coarse = false;  // quick mode for smoke tests
  int threads = 1;
};

int run_calibrate(CalibrateArgs& a) {
  a.common.resolve();
  const ew::MechanismGeometry& g = a.common.geom();
  ew::ConstraintParams cp = a.common.rc.constraints;

  // The rod-to-base clearance pins the actuator floor exactly:
  // the feasibility margin  L sin(theta) + limd >= 0  turns negative at
  // theta = -asin(limd / L), so the published floor fixes limd.
  cp.limd = std::sin(ew::deg_to_rad(-a.t1_floor)) * g.rod_length;

  ew::SweepParams sp;  // full resolution by default; the sweep is fast
  if (a.coarse) {
    sp.n_psi = 24;
    sp.n_phi = 24;
    sp.tilt_step = ew::deg_to_rad(1.0);
  }

  auto ceiling_for = [&](double lima_deg) {
    ew::ConstraintParams trial = cp;
    trial.lima = ew::deg_to_rad(lima_deg);
    ew::WorkspaceMap m = ew::sweep_workspace(g, trial, sp, a.threads);
    return ew::rad_to_deg(m.joint_extents.t1_max);
  };

  // Scan the cone limit on a 0.5-degree grid against the published ceiling.
  // The grid matches the precision of the published ranges; finer steps
  // would fit sweep-resolution noise, not the mechanism.
  double best = a.lima_lo, best_err = 1e300;
  for (double lima = a.lima_lo; lima <= a.lima_hi + 1e-9; lima += 0.5) {
    double err = std::abs(ceiling_for(lima) - a.t1_ceil);
    if (err < best_err) {
      best_err = err;
      best = lima;
    }
  }
  cp.lima = ew::deg_to_rad(best);

  ew::WorkspaceMap m = ew::sweep_workspace(g, cp, sp, a.threads);

  json out;
  out["format"] = 1;
  out["command"] = "calibrate";
  out["lima_deg"] = best;
  out["limd"] = cp.limd;
  out["clearance"] = cp.clearance;
  out["target"] = {{"t1_floor_deg", a.t1_floor}, {"t1_ceil_deg", a.t1_ceil}};
  const auto& e = m.joint_extents;
  out["measured"] = {
      {"sweep", a.coarse ? "coarse" : "full"},
      {"torsion_deg", json::array({ew::rad_to_deg(m.torsion_min),
                                   ew::rad_to_deg(m.torsion_max)})},
      {"t1_deg",
       json::array({ew::rad_to_deg(e.t1_min), ew::rad_to_deg(e.t1_max)})},
      {"t2_deg",
       json::array({ew::rad_to_deg(e.t2_min), ew::rad_to_deg(e.t2_max)})},
      {"t3_rel_deg",
       json::array({ew::rad_to_deg(e.t3_min), ew::rad_to_deg(e.t3_max)})}};
  print_json(out);
  return 0;
}

// ---------------------------------------------------------------------------

bool is_domain_error(const std::exception& e) {
  return dynamic_cast<const ew::unreachable_error*>(&e) ||
         dynamic_cast<const ew::mode_vanished_error*>(&e) ||
         dynamic_cast<const ew::ambiguous_selection_error*>(&e) ||
         dynamic_cast<const ew::no_convergence_error*>(&e) ||
         dynamic_cast<const ew::singular_jacobian_error*>(&e) ||
         dynamic_cast<const ew::center_infeasible_error*>(&e) ||
         dynamic_cast<const ew::empty_workspace_error*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-DOF spherical parallel wrist kinematics toolkit"};
  app.require_subcommand(1);

  FkArgs fk;
  CLI::App* fk_cmd = app.add_subcommand("fk", "direct kinematics");
  add_common(fk_cmd, fk.common);
  fk_cmd->add_option("--q", fk.q, "actuated joints t1,t2,t3")
      ->delimiter(',')
      ->expected(3)
      ->required();
  fk_cmd->add_flag("--all", fk.all, "enumerate every assembly branch");

  IkArgs ik;
  CLI::App* ik_cmd = app.add_subcommand("ik", "inverse kinematics");
  add_common(ik_cmd, ik.common);
  auto* ik_rpy =
      ik_cmd->add_option("--rpy", ik.rpy, "orientation as yaw,pitch,roll")
          ->delimiter(',')
          ->expected(3);
  auto* ik_tnt =
      ik_cmd->add_option("--tnt", ik.tnt, "orientation as azimuth,tilt,torsion")
          ->delimiter(',')
          ->expected(3)
          ->excludes(ik_rpy);
  ik_cmd
      ->add_option("--tnt-home", ik.tnt_home,
                   "azimuth,tilt,torsion measured from the home orientation")
      ->delimiter(',')
      ->expected(3)
      ->excludes(ik_rpy)
      ->excludes(ik_tnt);
  ik_cmd->add_flag("--all", ik.all, "enumerate every working mode");
  ik_cmd->add_option("--mode", ik.mode,
                     "working mode (++, +-, -+, --); default: home mode");

  JacArgs jac;
  CLI::App* jac_cmd =
      app.add_subcommand("jac", "velocity equation matrices and singularities");
  add_common(jac_cmd, jac.common);
  jac_cmd->add_option("--q", jac.q, "actuated joints t1,t2,t3")
      ->delimiter(',')
      ->expected(3);
  jac_cmd->add_option("--rpy", jac.rpy, "orientation as yaw,pitch,roll")
      ->delimiter(',')
      ->expected(3);
  jac_cmd->add_flag("--exact-yaw-row", jac.exact_yaw_row,
                    "use the exact yaw-rate row instead of [0 0 1]");

  CheckArgs check;
  CLI::App* check_cmd =
      app.add_subcommand("check", "feasibility of a single pose");
  add_common(check_cmd, check.common);
  auto* check_rpy =
      check_cmd->add_option("--rpy", check.rpy, "orientation as yaw,pitch,roll")
          ->delimiter(',')
          ->expected(3);
  auto* check_tnt =
      check_cmd
          ->add_option("--tnt", check.tnt, "orientation as azimuth,tilt,torsion")
          ->delimiter(',')
          ->expected(3)
          ->excludes(check_rpy);
  auto* check_tnth =
      check_cmd
          ->add_option("--tnt-home", check.tnt_home,
                       "azimuth,tilt,torsion measured from the home orientation")
          ->delimiter(',')
          ->expected(3)
          ->excludes(check_rpy)
          ->excludes(check_tnt);
  check_cmd->add_option("--q", check.q, "actuated joints t1,t2,t3")
      ->delimiter(',')
      ->expected(3)
      ->excludes(check_rpy)
      ->excludes(check_tnt)
      ->excludes(check_tnth);

  ScanArgs scan;
  CLI::App* scan_cmd = app.add_subcommand(
      "singular-scan", "rasterize det A over a tilt-and-torsion slice");
  add_common(scan_cmd, scan.common);
  scan_cmd->add_option("--torsion", scan.torsion, "slice torsion");
  scan_cmd->add_option("--max-tilt", scan.max_tilt, "tilt raster extent");
  scan_cmd->add_option("--n-az", scan.n_az, "azimuth samples");
  scan_cmd->add_option("--n-tilt", scan.n_tilt, "tilt samples per ray");
  scan_cmd->add_option("--out", scan.out_path, "CSV output path");

  WorkspaceArgs ws;
  CLI::App* ws_cmd =
      app.add_subcommand("workspace", "sweep the orientation workspace");
  add_common(ws_cmd, ws.sweep.common);
  add_sweep_options(ws_cmd, ws.sweep);
  ws_cmd->add_option("--format", ws.format, "output format: csv, json, obj");
  ws_cmd->add_option("--out", ws.out_path, "output file path");
  ws_cmd->add_flag("--jointspace", ws.with_jointspace,
                   "also export the joint-space OBJ next to --out");

  JointspaceArgs js;
  CLI::App* js_cmd = app.add_subcommand(
      "jointspace", "export the joint-space boundary surface as OBJ");
  add_common(js_cmd, js.sweep.common);
  add_sweep_options(js_cmd, js.sweep);
  js_cmd->add_option("--offset", js.offset,
                     "inward joint-space margin applied to every vertex");
  js_cmd->add_option("--out", js.out_path, "OBJ output path");

  TargetsArgs tg;
  CLI::App* tg_cmd = app.add_subcommand(
      "targets", "feasibility over a yaw/pitch/roll design box");
  add_common(tg_cmd, tg.common);
  tg_cmd->add_option("--yaw", tg.yaw, "yaw half-range");
  tg_cmd->add_option("--pitch", tg.pitch, "pitch half-range");
  tg_cmd->add_option("--roll", tg.roll, "roll half-range");
  tg_cmd->add_option("--n", tg.n, "grid points per axis");
  tg_cmd->add_option("--max-failures", tg.max_failures,
                     "cap on failure records in the report");

  CalibrateArgs cal;
  CLI::App* cal_cmd = app.add_subcommand(
      "calibrate",
      "re-derive the cone and clearance limits from the actuator range");
  add_common(cal_cmd, cal.common);
  cal_cmd->add_option("--t1-floor", cal.t1_floor,
                      "target actuator floor (degrees)");
  cal_cmd->add_option("--t1-ceil", cal.t1_ceil,
                      "target actuator ceiling (degrees)");
  cal_cmd->add_option("--lima-lo", cal.lima_lo, "scan start (degrees)");
  cal_cmd->add_option("--lima-hi", cal.lima_hi, "scan end (degrees)");
  cal_cmd->add_flag("--coarse", cal.coarse,
                    "use a reduced-resolution sweep (smoke tests only)");
  cal_cmd->add_option("--threads", cal.threads, "worker threads per sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fk_cmd) return run_fk(fk);
    if (*ik_cmd) return run_ik(ik);
    if (*jac_cmd) return run_jac(jac);
    if (*check_cmd) return run_check(check);
    if (*scan_cmd) return run_singular_scan(scan);
    if (*ws_cmd) return run_workspace(ws);
    if (*js_cmd) return run_jointspace(js);
    if (*tg_cmd) return run_targets(tg);
    if (*cal_cmd) return run_calibrate(cal);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_domain_error(e) ? 2 : 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
