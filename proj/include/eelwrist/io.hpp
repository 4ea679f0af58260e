#ifndef EELWRIST_IO_HPP
#define EELWRIST_IO_HPP

// Serialization boundary: JSON configs (schema "format": 1), CSV/JSON/OBJ
// workspace exports, and deterministic number formatting.
//
// All floating-point output is formatted to 9 significant digits so that
// identical inputs produce byte-identical files. Angles are degrees in
// every file format (configs, CSV, OBJ, JSON reports); the library API
// stays in radians.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "constraints.hpp"
#include "geometry.hpp"
#include "kinematics.hpp"
#include "orientation.hpp"
#include "workspace.hpp"

namespace eelwrist {

using json = nlohmann::ordered_json;

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// %.9g with negative zero normalized to "0".
inline std::string fmt9(double v) {
  if (v == 0.0) v = 0.0;  // collapse -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Round a double to its 9-significant-digit representation, so JSON
/// numbers match the text formatting used everywhere else.
inline double round9(double v) { return std::strtod(fmt9(v).c_str(), nullptr); }

/// Recursively apply round9 to every number in a JSON document.
inline void json_round9(json& j) {
  if (j.is_number_float()) {
    j = round9(j.get<double>());
  } else if (j.is_array() || j.is_object()) {
    for (auto& el : j) json_round9(el);
  }
}

// ---------------------------------------------------------------------------
// Geometry <-> JSON

inline json vec_to_json(const Vec3& v) {
  return json::array({v.x(), v.y(), v.z()});
}

inline Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw config_error(std::string(what) + " must be an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json geometry_to_json(const MechanismGeometry& g) {
  json j;
  j["format"] = 1;
  j["variant"] = to_string(g.variant);
  j["a"] = g.a;
  j["b"] = g.b;
  j["c"] = g.c;
  j["rod_length"] = g.rod_length;
  j["coupler_length"] = g.coupler_length;
  j["axes"] = {{"i1", vec_to_json(g.i1)},
               {"i2", vec_to_json(g.i2)},
               {"d1", vec_to_json(g.d1)},
               {"d2", vec_to_json(g.d2)}};
  j["scale_mm"] = g.scale_mm;
  return j;
}

/// Builds a geometry from JSON: the named variant supplies every default,
/// explicit fields override it, and the home pose is re-derived when the
/// overrides move it.
inline MechanismGeometry geometry_from_json(const json& j) {
  if (j.contains("format") && j["format"].get<int>() != 1)
    throw config_error("unsupported geometry format (expected 1)");
  DesignVariant v = DesignVariant::parallel_actuators;
  if (j.contains("variant")) v = variant_from_string(j["variant"].get<std::string>());
  MechanismGeometry g = make_geometry(v);
  bool dirty = false;
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) {
      dst = j[key].get<double>();
      dirty = true;
    }
  };
  num("a", g.a);
  num("b", g.b);
  num("c", g.c);
  num("rod_length", g.rod_length);
  num("coupler_length", g.coupler_length);
  if (j.contains("scale_mm")) g.scale_mm = j["scale_mm"].get<double>();
  if (j.contains("axes")) {
    const json& ax = j["axes"];
    if (ax.contains("i1")) g.i1 = vec_from_json(ax["i1"], "axes.i1");
    if (ax.contains("i2")) g.i2 = vec_from_json(ax["i2"], "axes.i2");
    if (ax.contains("d1")) g.d1 = vec_from_json(ax["d1"], "axes.d1");
    if (ax.contains("d2")) g.d2 = vec_from_json(ax["d2"], "axes.d2");
    dirty = true;
  }
  if (dirty) {
    g.a1 = Vec3(g.a, g.b, g.c);
    g.a2 = Vec3(-g.a, g.b, g.c);
    detail::validate_geometry(g);
    auto res = closure_residuals(g, g.home.joints, g.home.orientation);
    if (std::abs(res[0]) > 1e-9 || std::abs(res[1]) > 1e-9) recompute_home(g);
  }
  return g;
}

// ---------------------------------------------------------------------------
// ConstraintParams / SweepParams <-> JSON (angles in degrees)

inline json constraints_to_json(const ConstraintParams& cp) {
  json j;
  j["lima_deg"] = rad_to_deg(cp.lima);
  j["limd"] = cp.limd;
  j["clearance"] = cp.clearance;
  j["samples_n"] = cp.samples_n;
  json ov = json::array();
  for (const auto& o : cp.cone_override)
    ov.push_back(o ? json(rad_to_deg(*o)) : json(nullptr));
  j["cone_override_deg"] = ov;
  j["singularity_margin"] =
      cp.singularity_margin ? json(*cp.singularity_margin) : json(nullptr);
  return j;
}

inline ConstraintParams constraints_from_json(const json& j) {
  ConstraintParams cp;
  if (j.contains("lima_deg")) cp.lima = deg_to_rad(j["lima_deg"].get<double>());
  if (j.contains("limd")) cp.limd = j["limd"].get<double>();
  if (j.contains("clearance")) cp.clearance = j["clearance"].get<double>();
  if (j.contains("samples_n")) cp.samples_n = j["samples_n"].get<int>();
  if (j.contains("cone_override_deg")) {
    const json& ov = j["cone_override_deg"];
    if (!ov.is_array() || ov.size() != 4)
      throw config_error("cone_override_deg must be an array of 4 entries");
    for (int i = 0; i < 4; ++i)
      if (!ov[i].is_null())
        cp.cone_override[i] = deg_to_rad(ov[i].get<double>());
  }
  if (j.contains("singularity_margin") && !j["singularity_margin"].is_null())
    cp.singularity_margin = j["singularity_margin"].get<double>();
  if (cp.lima <= 0 || cp.limd < 0 || cp.clearance < 0 || cp.samples_n < 1)
    throw config_error("constraint parameters out of range");
  return cp;
}

inline json sweep_to_json(const SweepParams& sp) {
  json j;
  j["n_psi"] = sp.n_psi;
  j["n_phi"] = sp.n_phi;
  j["tilt_step_deg"] = rad_to_deg(sp.tilt_step);
  j["max_tilt_deg"] = rad_to_deg(sp.max_tilt);
  j["refine_div"] = sp.refine_div;
  j["centroid_mode"] =
      sp.centroid_mode == CentroidMode::area ? "area" : "vertex_average";
  return j;
}

inline SweepParams sweep_from_json(const json& j) {
  SweepParams sp;
  if (j.contains("n_psi")) sp.n_psi = j["n_psi"].get<int>();
  if (j.contains("n_phi")) sp.n_phi = j["n_phi"].get<int>();
  if (j.contains("tilt_step_deg"))
    sp.tilt_step = deg_to_rad(j["tilt_step_deg"].get<double>());
  if (j.contains("max_tilt_deg"))
    sp.max_tilt = deg_to_rad(j["max_tilt_deg"].get<double>());
  if (j.contains("refine_div")) sp.refine_div = j["refine_div"].get<double>();
  if (j.contains("centroid_mode")) {
    std::string m = j["centroid_mode"].get<std::string>();
    if (m == "area")
      sp.centroid_mode = CentroidMode::area;
    else if (m == "vertex_average")
      sp.centroid_mode = CentroidMode::vertex_average;
    else
      throw config_error("centroid_mode must be 'area' or 'vertex_average'");
  }
  sp.validate();
  return sp;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  MechanismGeometry geometry = make_geometry(DesignVariant::parallel_actuators);
  ConstraintParams constraints;
  SweepParams sweep;
  bool degrees = true;  ///< CLI argument/print units
  std::string output_format = "csv";
};

inline RunConfig config_from_json(const json& j) {
  if (!j.contains("format") || j["format"].get<int>() != 1)
    throw config_error("config must declare \"format\": 1");
  RunConfig rc;
  if (j.contains("units")) {
    std::string u = j["units"].get<std::string>();
    if (u == "degrees")
      rc.degrees = true;
    else if (u == "radians")
      rc.degrees = false;
    else
      throw config_error("units must be 'degrees' or 'radians'");
  }
  if (j.contains("geometry")) rc.geometry = geometry_from_json(j["geometry"]);
  if (j.contains("constraints"))
    rc.constraints = constraints_from_json(j["constraints"]);
  if (j.contains("sweep")) rc.sweep = sweep_from_json(j["sweep"]);
  if (j.contains("output") && j["output"].contains("format")) {
    rc.output_format = j["output"]["format"].get<std::string>();
    if (rc.output_format != "csv" && rc.output_format != "json" &&
        rc.output_format != "obj")
      throw config_error("output.format must be csv, json, or obj");
  }
  return rc;
}

inline json config_to_json(const RunConfig& rc) {
  json j;
  j["format"] = 1;
  j["units"] = rc.degrees ? "degrees" : "radians";
  j["geometry"] = geometry_to_json(rc.geometry);
  j["constraints"] = constraints_to_json(rc.constraints);
  j["sweep"] = sweep_to_json(rc.sweep);
  j["output"] = {{"format", rc.output_format}};
  return j;
}

// ---------------------------------------------------------------------------
// Workspace exports

/// CSV: one row per boundary point, slices ordered by descending torsion.
inline std::string workspace_csv(const WorkspaceMap& map) {
  std::string out =
      "torsion_deg,azimuth_deg,tilt_deg,x,y,z,t1_deg,t2_deg,t3_deg\n";
  for (const WorkspaceSlice* s : map.rows()) {
    double z = rad_to_deg(s->torsion);
    for (const auto& b : s->boundary) {
      double az = rad_to_deg(b.azimuth), tl = rad_to_deg(b.tilt);
      out += fmt9(z) + "," + fmt9(az) + "," + fmt9(tl) + "," +
             fmt9(rad_to_deg(b.x())) + "," + fmt9(rad_to_deg(b.y())) + "," +
             fmt9(z) + "," + fmt9(rad_to_deg(b.joints.t1)) + "," +
             fmt9(rad_to_deg(b.joints.t2)) + "," +
             fmt9(rad_to_deg(b.joints.t3)) + "\n";
    }
  }
  return out;
}

inline json workspace_to_json(const WorkspaceMap& map) {
  json j;
  j["format"] = 1;
  j["variant"] = to_string(map.variant);
  j["sweep"] = sweep_to_json(map.params);
  j["constraints"] = constraints_to_json(map.constraints);
  j["torsion_extent_deg"] =
      json::array({rad_to_deg(map.torsion_min), rad_to_deg(map.torsion_max)});
  if (map.joint_extents.valid()) {
    const auto& e = map.joint_extents;
    j["joint_extents_deg"] = {
        {"t1", json::array({rad_to_deg(e.t1_min), rad_to_deg(e.t1_max)})},
        {"t2", json::array({rad_to_deg(e.t2_min), rad_to_deg(e.t2_max)})},
        {"t3_rel", json::array({rad_to_deg(e.t3_min), rad_to_deg(e.t3_max)})}};
  }
  j["feasibility_evals"] = map.feasibility_evals;
  j["star_violations"] = map.star_violations;
  json slices = json::array();
  for (const WorkspaceSlice* s : map.rows()) {
    json sj;
    sj["torsion_deg"] = rad_to_deg(s->torsion);
    sj["area"] = s->area;
    sj["centroid"] = json::array({s->centroid_x(), s->centroid_y()});
    json pts = json::array();
    for (const auto& b : s->boundary)
      pts.push_back(json::array(
          {rad_to_deg(b.azimuth), rad_to_deg(b.tilt), rad_to_deg(b.joints.t1),
           rad_to_deg(b.joints.t2), rad_to_deg(b.joints.t3)}));
    sj["boundary_az_tilt_t1_t2_t3_deg"] = pts;
    slices.push_back(sj);
  }
  j["slices"] = slices;
  json_round9(j);
  return j;
}

namespace detail {

/// Triangulated quad-strip surface between consecutive rows of vertices.
inline std::string obj_surface(const std::vector<std::vector<Vec3>>& rows) {
  std::string out;
  for (const auto& row : rows)
    for (const auto& v : row)
      out += "v " + fmt9(v.x()) + " " + fmt9(v.y()) + " " + fmt9(v.z()) + "\n";
  if (rows.size() >= 2) {
    int base = 1;
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
      int n = static_cast<int>(rows[i].size());
      for (int k = 0; k < n; ++k) {
        int kn = (k + 1) % n;
        int a = base + k, b = base + kn;
        int c = base + n + kn, d = base + n + k;
        out += "f " + std::to_string(a) + " " + std::to_string(b) + " " +
               std::to_string(c) + "\n";
        out += "f " + std::to_string(a) + " " + std::to_string(c) + " " +
               std::to_string(d) + "\n";
      }
      base += n;
    }
  }
  return out;
}

}  // namespace detail

/// OBJ mesh of the workspace boundary: x/y = polar embedding in degrees,
/// z = torsion in degrees; consecutive slices joined by ray index.
inline std::string workspace_obj(const WorkspaceMap& map) {
  std::vector<std::vector<Vec3>> rows;
  for (const WorkspaceSlice* s : map.rows()) {
    std::vector<Vec3> row;
    row.reserve(s->boundary.size());
    for (const auto& b : s->boundary)
      row.push_back(Vec3(rad_to_deg(b.x()), rad_to_deg(b.y()),
                         rad_to_deg(s->torsion)));
    rows.push_back(std::move(row));
  }
  return "# workspace boundary (x,y: tilt embedding deg; z: torsion deg)\n" +
         detail::obj_surface(rows);
}

/// OBJ mesh of the joint-space boundary surface: axes are t1, t2 and the
/// motor-relative t3, all in degrees. A positive offset shrinks the surface
/// inward by that many radians (a joint-space safety margin).
inline std::string jointspace_obj(const WorkspaceMap& map,
                                  double offset = 0.0) {
  std::vector<JointAngles> cloud = joint_space_cloud(map, offset);
  std::vector<const WorkspaceSlice*> slice_rows = map.rows();
  std::vector<std::vector<Vec3>> rows;
  size_t idx = 0;
  const double t3h = make_geometry(map.variant).home.joints.t3;
  for (const WorkspaceSlice* s : slice_rows) {
    std::vector<Vec3> row;
    for (size_t k = 0; k < s->boundary.size(); ++k, ++idx)
      row.push_back(Vec3(rad_to_deg(cloud[idx].t1), rad_to_deg(cloud[idx].t2),
                         rad_to_deg(wrap_pi(cloud[idx].t3 - t3h))));
    rows.push_back(std::move(row));
  }
  return "# joint-space boundary (t1, t2, t3-home in deg)\n" +
         detail::obj_surface(rows);
}

}  // namespace eelwrist

#endif  // EELWRIST_IO_HPP
