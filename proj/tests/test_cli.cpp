#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "eelwrist/io.hpp"

#ifndef EELWRIST_CLI_PATH
#error "EELWRIST_CLI_PATH must point at the command line binary"
#endif
#ifndef EELWRIST_DATA_DIR
#define EELWRIST_DATA_DIR "."
#endif

namespace ew = eelwrist;
using json = ew::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

/// Runs the tool with the given arguments, capturing stdout. stderr is
/// routed to /dev/null; tests assert on exit codes and machine output only.
RunResult run_cli(const std::string& args) {
  std::string cmd =
      std::string(EELWRIST_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json parse(const RunResult& r) { return json::parse(r.out); }

std::string temp_path(const std::string& name) {
  return testing::TempDir() + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST(CliFk, AllBranchesWithRadianInput) {
  RunResult r = run_cli("fk --q 0.1,0.2,0.785398163397448 --radians --all");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  ASSERT_EQ(j["solutions"].size(), 4u);
  int at_vertical = 0;
  for (const auto& s : j["solutions"]) {
    // Printed values are rounded to 9 significant digits.
    if (std::abs(s["rpy"]["pitch"].get<double>() - ew::kPi / 2.0) < 1e-7)
      ++at_vertical;
    for (const auto& res : s["residuals"])
      EXPECT_LT(std::abs(res.get<double>()), 1e-9);
  }
  EXPECT_EQ(at_vertical, 2);  // the factored pitch root appears twice
}

TEST(CliFk, DegreesAreTheDefaultUnits) {
  RunResult r = run_cli("fk --q 0,0,45");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  ASSERT_EQ(j["count"], 1);
  const json& rpy = j["solutions"][0]["rpy"];
  EXPECT_NEAR(rpy["yaw"].get<double>(), 45.0, 1e-9);
  EXPECT_NEAR(rpy["pitch"].get<double>(), 0.0, 1e-9);
  EXPECT_NEAR(rpy["roll"].get<double>(), 0.0, 1e-9);
  EXPECT_EQ(j["method"], "closed_form");
}

TEST(CliFk, OutputIsByteIdentical) {
  RunResult a = run_cli("fk --q 0.1,0.2,0.785398163397448 --radians --all");
  RunResult b = run_cli("fk --q 0.1,0.2,0.785398163397448 --radians --all");
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(a.out.empty());
}

TEST(CliIk, AllWorkingModes) {
  RunResult r = run_cli("ik --rpy 45,15,15 --all");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  ASSERT_EQ(j["solutions"].size(), 4u);
}

TEST(CliIk, DefaultModeMatchesHome) {
  RunResult r = run_cli("ik --rpy 45,15,15");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  ASSERT_EQ(j["count"], 1);
  const json& s = j["solutions"][0];
  EXPECT_EQ(s["mode"], "++");
  EXPECT_NEAR(s["q"][0].get<double>(), -21.4187725, 1e-5);
  EXPECT_NEAR(s["q"][1].get<double>(), 21.1453719, 1e-5);
  EXPECT_NEAR(s["q"][2].get<double>(), 45.0, 1e-9);
}

TEST(CliIk, HomeRelativeTiltTorsionInput) {
  RunResult r = run_cli("ik --tnt-home 0,0,0");
  ASSERT_EQ(r.exit_code, 0);
  const json s = parse(r)["solutions"][0];
  EXPECT_NEAR(s["q"][0].get<double>(), 0.0, 1e-6);
  EXPECT_NEAR(s["q"][1].get<double>(), 0.0, 1e-6);
  EXPECT_NEAR(s["q"][2].get<double>(), 45.0, 1e-9);
}

TEST(CliExitCodes, DomainErrorsReturnTwo) {
  EXPECT_EQ(run_cli("ik --rpy 0,80,0").exit_code, 2);  // unreachable pose
}

TEST(CliExitCodes, UsageErrorsReturnOne) {
  EXPECT_EQ(run_cli("fk").exit_code, 1);            // missing required --q
  EXPECT_EQ(run_cli("fk --nonsense").exit_code, 1); // unknown flag
  EXPECT_EQ(run_cli("nosuchcommand").exit_code, 1);
  // --all enumeration is closed-form and wired to one design only.
  EXPECT_EQ(run_cli("fk --variant orthogonal_axes --q 10,5,50 --all")
                .exit_code,
            1);
  EXPECT_EQ(run_cli("ik --rpy 45,15,15 --tnt 0,10,45").exit_code, 1);
}

TEST(CliExitCodes, HelpReturnsZero) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("ik --help").exit_code, 0);
}

TEST(CliJac, HomeReportFrozen) {
  RunResult r = run_cli("jac --q 0,0,45");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  EXPECT_NEAR(j["det_A"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(j["det_B"].get<double>(), 0.5, 1e-9);
  EXPECT_NEAR(j["cond_B"].get<double>(), std::sqrt(2.0), 1e-8);
  EXPECT_EQ(j["singularity"], "none");
  EXPECT_NEAR(j["serial_margin"][0].get<double>(), 0.707106781, 1e-8);
  EXPECT_NEAR(j["serial_margin"][1].get<double>(), 0.707106781, 1e-8);
  ASSERT_TRUE(j["J_inverse"].is_array());
  const double expect[3][3] = {{1, -1, 0}, {1, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(j["J_inverse"][i][k].get<double>(), expect[i][k], 1e-9);
}

TEST(CliJac, SerialSingularityReportsInfiniteConditioning) {
  // Identity orientation puts leg 2 at its closure tangency (double root);
  // the joints come from enumerating the surviving modes of that pose.
  RunResult r = run_cli(
      "jac --q 0.427078586,0.785398163397448,0 --rpy 0,0,0 --radians");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  EXPECT_EQ(j["singularity"], "serial");
  EXPECT_EQ(j["cond_B"], "inf");
  EXPECT_TRUE(j["J_inverse"].is_null());
  EXPECT_NEAR(j["serial_margin"][1].get<double>(), 0.0, 1e-8);
}

TEST(CliJac, StrictModeRefusesTheTangentPose) {
  // Asking for the home working mode at the tangency is a domain error.
  EXPECT_EQ(run_cli("jac --rpy 0,0,0").exit_code, 2);
}

TEST(CliCheck, FeasibleAndInfeasibleBothExitZero) {
  RunResult ok = run_cli("check --tnt-home 0,2,25");
  ASSERT_EQ(ok.exit_code, 0);
  EXPECT_TRUE(parse(ok)["feasible"].get<bool>());

  RunResult bad = run_cli("check --rpy 45,15,15");
  ASSERT_EQ(bad.exit_code, 0);
  json j = parse(bad);
  EXPECT_FALSE(j["feasible"].get<bool>());
  bool found = false;
  for (const auto& c : j["checks"])
    if (c["id"] == "base_rod1") {
      found = true;
      EXPECT_FALSE(c["ok"].get<bool>());
      EXPECT_LT(c["margin"].get<double>(), 0.0);
    }
  EXPECT_TRUE(found);
}

TEST(CliSingularScan, GridShapeAndCenterRow) {
  RunResult r = run_cli("singular-scan --n-az 8 --n-tilt 5 --max-tilt 10");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(count_lines(r.out), 1 + 8 * 6);
  std::istringstream in(r.out);
  std::string header, first;
  std::getline(in, header);
  EXPECT_EQ(header, "azimuth_deg,tilt_deg,x,y,det_a,det_b,h1,h2,reachable");
  std::getline(in, first);
  // Tilt 0 on the first ray: the home pose itself.
  EXPECT_EQ(first, "0,0,0,0,1,0.5,0.707106781,0.707106781,1");
}

TEST(CliWorkspace, StdoutCsvMatchesLibrary) {
  RunResult r = run_cli("workspace --n-psi 24 --n-phi 24 --tilt-step 1");
  ASSERT_EQ(r.exit_code, 0);
  ew::SweepParams sp;
  sp.n_psi = 24;
  sp.n_phi = 24;
  sp.tilt_step = ew::deg_to_rad(1.0);
  ew::WorkspaceMap m = ew::sweep_workspace(
      ew::make_geometry(ew::DesignVariant::parallel_actuators),
      ew::ConstraintParams{}, sp);
  EXPECT_EQ(r.out, ew::workspace_csv(m));
}

TEST(CliWorkspace, ThreadedRunWritesIdenticalFile) {
  std::string serial = temp_path("ws_serial.csv");
  std::string threaded = temp_path("ws_threads.csv");
  RunResult a = run_cli(
      "workspace --n-psi 24 --n-phi 24 --tilt-step 1 --out " + serial);
  RunResult b = run_cli(
      "workspace --n-psi 24 --n-phi 24 --tilt-step 1 --threads 4 --out " +
      threaded);
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  std::string sa = slurp(serial), sb = slurp(threaded);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  // The summary on stdout reports the sweep, not the payload.
  json js = parse(a);
  EXPECT_DOUBLE_EQ(js["torsion_extent_deg"][1].get<double>(), 15.0);
  EXPECT_EQ(js["outputs"][0], serial);
}

TEST(CliWorkspace, JointspaceExportRidesAlong) {
  std::string out = temp_path("ws_js.csv");
  RunResult r = run_cli(
      "workspace --n-psi 24 --n-phi 24 --tilt-step 1 --jointspace --out " +
      out);
  ASSERT_EQ(r.exit_code, 0);
  std::string obj = slurp(temp_path("ws_js_jointspace.obj"));
  ASSERT_FALSE(obj.empty());
  EXPECT_EQ(obj.substr(0, 1), "#");  // self-describing comment header
  EXPECT_NE(obj.find("\nv "), std::string::npos);
  json js = parse(r);
  ASSERT_EQ(js["outputs"].size(), 2u);
}

TEST(CliJointspace, WritesObjSurface) {
  std::string out = temp_path("cloud.obj");
  RunResult r = run_cli(
      "jointspace --n-psi 24 --n-phi 24 --tilt-step 1 --offset 0.5 --out " +
      out);
  ASSERT_EQ(r.exit_code, 0);
  std::string obj = slurp(out);
  int verts = 0, faces = 0;
  std::istringstream in(obj);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++verts;
    if (line.rfind("f ", 0) == 0) ++faces;
  }
  EXPECT_EQ(verts, 3 * 24);
  EXPECT_EQ(faces, 2 * 24 * 2);
}

TEST(CliTargets, SmallBoxFullyFeasible) {
  RunResult r = run_cli("targets --yaw 10 --pitch 5 --roll 2 --n 3");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  EXPECT_EQ(j["total"], 27);
  EXPECT_EQ(j["feasible"], 27);
  EXPECT_DOUBLE_EQ(j["fraction"].get<double>(), 1.0);
}

TEST(CliConfig, RadianUnitsFromFile) {
  std::string cfg = temp_path("radians.json");
  {
    std::ofstream out(cfg);
    out << "{\"format\":1,\"units\":\"radians\"}\n";
  }
  RunResult r = run_cli("ik --config " + cfg + " --rpy 0.7853981633974483,0,0");
  ASSERT_EQ(r.exit_code, 0);
  json j = parse(r);
  EXPECT_EQ(j["units"], "radians");
  // Outputs follow the config units too: t3 comes back in radians.
  const json& q = j["solutions"][0]["q"];
  EXPECT_NEAR(q[2].get<double>(), 0.7853981633974483, 1e-9);
  EXPECT_NEAR(q[0].get<double>(), 0.0, 1e-6);
}

TEST(CliConfig, CommandLineUnitsOverrideConfig) {
  std::string cfg = temp_path("radians2.json");
  {
    std::ofstream out(cfg);
    out << "{\"format\":1,\"units\":\"radians\"}\n";
  }
  RunResult r = run_cli("ik --config " + cfg + " --degrees --rpy 45,0,0");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NEAR(parse(r)["solutions"][0]["q"][2].get<double>(), 45.0, 1e-9);
}

TEST(CliConfig, ShippedDefaultConfigIsAccepted) {
  RunResult r = run_cli("check --config " +
                        std::string(EELWRIST_DATA_DIR) +
                        "/default_config.json --tnt-home 0,0,0");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_TRUE(parse(r)["feasible"].get<bool>());
}
