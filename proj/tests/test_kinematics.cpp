#include "eelwrist/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace ew = eelwrist;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// |A - B|_F = 2 sqrt(2) sin(theta/2), which stays accurate for tiny angles
// where acos of the trace bottoms out near sqrt(machine eps).
double angle_between(const ew::Orientation& a, const ew::Orientation& b) {
  double f = (a.matrix() - b.matrix()).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::min(1.0, f));
}

double trig_residual(const ew::detail::TrigRoots& r, double t) {
  return r.a * std::cos(t) + r.b * std::sin(t) - r.c;
}

ew::MechanismGeometry pa() {
  return ew::make_geometry(ew::DesignVariant::parallel_actuators);
}

}  // namespace

// ---------------------------------------------------------------------------
// The scalar closure solver (a cos t + b sin t = c)

TEST(SolveTrig, TwoSymmetricRoots) {
  ew::detail::TrigRoots r = ew::detail::solve_trig(1.0, 0.0, 0.5);
  ASSERT_EQ(r.count, 2);
  double lo = std::min(r.t[0], r.t[1]), hi = std::max(r.t[0], r.t[1]);
  EXPECT_NEAR(lo, -ew::kPi / 3.0, 1e-12);
  EXPECT_NEAR(hi, ew::kPi / 3.0, 1e-12);
  EXPECT_FALSE(r.double_root);
  EXPECT_GT(r.discriminant, 0.0);
  // Slopes carry the branch signs.
  EXPECT_LT(ew::detail::solve_trig(1.0, 0.0, 0.5).slope[0] *
                ew::detail::solve_trig(1.0, 0.0, 0.5).slope[1],
            0.0);
}

TEST(SolveTrig, DoubleRootSnapsToExtremum) {
  // cos t = 1 has the unique (tangent) root t = 0.
  ew::detail::TrigRoots r = ew::detail::solve_trig(1.0, 0.0, 1.0);
  ASSERT_EQ(r.count, 1);
  EXPECT_TRUE(r.double_root);
  EXPECT_DOUBLE_EQ(r.t[0], 0.0);  // snapped exactly onto atan2(b, a)
  EXPECT_NEAR(r.slope[0], 0.0, 1e-15);
}

TEST(SolveTrig, NoRootsWhenAmplitudeTooSmall) {
  ew::detail::TrigRoots r = ew::detail::solve_trig(0.3, 0.4, 1.0);
  EXPECT_EQ(r.count, 0);
  EXPECT_LT(r.discriminant, 0.0);
}

TEST(SolveTrig, DegenerateLeadStillFindsBothRoots) {
  // c + a = 0 degenerates the tan-half quadratic to linear; t = pi is then
  // always a root (the tan-half blind spot) alongside the linear one.
  ew::detail::TrigRoots r = ew::detail::solve_trig(1.0, 0.5, -1.0);
  ASSERT_EQ(r.count, 2);
  for (int i = 0; i < r.count; ++i)
    EXPECT_NEAR(trig_residual(r, r.t[i]), 0.0, 1e-9);
  bool has_pi = std::abs(std::abs(r.t[0]) - ew::kPi) < 1e-9 ||
                std::abs(std::abs(r.t[1]) - ew::kPi) < 1e-9;
  EXPECT_TRUE(has_pi);
  EXPECT_TRUE(r.near_singular_quadratic);
}

TEST(SolveTrig, FuzzResidualsAlwaysTiny) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  int total_roots = 0;
  for (int i = 0; i < 5000; ++i) {
    double a = coef(rng), b = coef(rng), c = coef(rng);
    ew::detail::TrigRoots r = ew::detail::solve_trig(a, b, c);
    ASSERT_LE(r.count, 2);
    double scale = std::abs(a) + std::abs(b) + std::abs(c);
    for (int k = 0; k < r.count; ++k) {
      EXPECT_LE(std::abs(trig_residual(r, r.t[k])), 1e-9 * scale);
      EXPECT_GT(r.t[k], -ew::kPi - 1e-12);
      EXPECT_LE(r.t[k], ew::kPi + 1e-12);
    }
    if (r.count == 2) {
      EXPECT_GT(std::abs(r.t[0] - r.t[1]), 1e-7);  // deduplicated
    }
    total_roots += r.count;
  }
  EXPECT_GT(total_roots, 1000);  // the fuzz actually exercised root cases
}

// ---------------------------------------------------------------------------
// Inverse kinematics

TEST(InverseKinematics, HomeOrientationFourBranches) {
  ew::MechanismGeometry g = pa();
  ew::IkSolutionSet set = ew::inverse_kinematics_all(g, g.home.orientation);
  ASSERT_EQ(set.solutions.size(), 4u);
  EXPECT_TRUE(set.leg_reachable[0]);
  EXPECT_TRUE(set.leg_reachable[1]);
  bool found_home = false;
  for (const auto& s : set.solutions) {
    EXPECT_NEAR(s.joints.t3, ew::kPi / 4.0, 1e-12);
    EXPECT_LE(std::abs(s.residuals[0]), 1e-9);
    EXPECT_LE(std::abs(s.residuals[1]), 1e-9);
    if (s.mode.s1 == +1 && s.mode.s2 == +1) {
      found_home = true;
      EXPECT_NEAR(s.joints.t1, 0.0, 1e-12);
      EXPECT_NEAR(s.joints.t2, 0.0, 1e-12);
      EXPECT_NEAR(s.h[0], kSqrt2 / 2.0, 1e-12);
      EXPECT_NEAR(s.h[1], kSqrt2 / 2.0, 1e-12);
    }
  }
  EXPECT_TRUE(found_home);
}

TEST(InverseKinematics, FrozenPose45_15_15) {
  ew::MechanismGeometry g = pa();
  ew::Orientation o = ew::rpy_to_orientation(
      ew::deg_to_rad(45.0), ew::deg_to_rad(15.0), ew::deg_to_rad(15.0));
  ew::IkSolutionSet set = ew::inverse_kinematics_all(g, o);
  ASSERT_EQ(set.solutions.size(), 4u);
  for (const auto& s : set.solutions) {
    EXPECT_NEAR(s.joints.t3, ew::kPi / 4.0, 1e-12);
    // Frozen root values for this pose.
    double expect_t1 =
        s.mode.s1 > 0 ? -0.37382809738933798 : 2.0262649239736077;
    double expect_t2 =
        s.mode.s2 > 0 ? 0.36905636450324569 : 1.7149396977226408;
    EXPECT_NEAR(s.joints.t1, expect_t1, 1e-12);
    EXPECT_NEAR(s.joints.t2, expect_t2, 1e-12);
    // Mode labels equal the sign of the transmission factor h.
    EXPECT_EQ(s.mode.s1, s.h[0] > 0 ? +1 : -1);
    EXPECT_EQ(s.mode.s2, s.h[1] > 0 ? +1 : -1);
    EXPECT_NEAR(std::abs(s.h[0]), 0.66426743284440704, 1e-12);
    EXPECT_NEAR(std::abs(s.h[1]), 0.63806576581277241, 1e-12);
  }
}

TEST(InverseKinematics, ModeSelectionMatchesEnumeration) {
  ew::MechanismGeometry g = pa();
  ew::Orientation o = ew::rpy_to_orientation(
      ew::deg_to_rad(45.0), ew::deg_to_rad(15.0), ew::deg_to_rad(15.0));
  ew::IkSolution mm = ew::inverse_kinematics(g, o, ew::WorkingMode{-1, +1});
  EXPECT_NEAR(mm.joints.t1, 2.0262649239736077, 1e-12);
  EXPECT_NEAR(mm.joints.t2, 0.36905636450324569, 1e-12);
  ew::IkSolution pp = ew::inverse_kinematics(g, o, g.home.mode);
  EXPECT_NEAR(pp.joints.t1, -0.37382809738933798, 1e-12);
}

TEST(InverseKinematics, UnreachableThrows) {
  ew::MechanismGeometry g = pa();
  ew::Orientation o = ew::rpy_to_orientation(0.0, ew::deg_to_rad(80.0), 0.0);
  EXPECT_THROW(ew::inverse_kinematics(g, o, g.home.mode),
               ew::unreachable_error);
  ew::IkSolutionSet set = ew::inverse_kinematics_all(g, o);
  EXPECT_FALSE(set.leg_reachable[0] && set.leg_reachable[1]);
  EXPECT_TRUE(set.solutions.empty());
}

TEST(InverseKinematics, TangencyVanishesWorkingMode) {
  // At the identity orientation leg 2 sits exactly at its closure tangency:
  // a single (double) root with h2 = 0, so no signed mode exists.
  ew::MechanismGeometry g = pa();
  ew::Orientation id = ew::Orientation::identity();
  EXPECT_THROW(ew::inverse_kinematics(g, id, g.home.mode),
               ew::mode_vanished_error);
  ew::IkSolutionSet set = ew::inverse_kinematics_all(g, id);
  EXPECT_TRUE(set.double_root[1]);
  ASSERT_EQ(set.solutions.size(), 2u);
  for (const auto& s : set.solutions) {
    EXPECT_NEAR(s.joints.t2, ew::kPi / 4.0, 1e-12);  // snapped tangent root
    EXPECT_LE(std::abs(s.h[1]), 1e-9);
    EXPECT_EQ(s.mode.s2, 0);
  }
}

// ---------------------------------------------------------------------------
// Direct kinematics (closed form, parallel_actuators)

TEST(DirectKinematics, FrozenInputFourSolutions) {
  ew::MechanismGeometry g = pa();
  ew::JointAngles q{0.1, 0.2, ew::kPi / 4.0};
  ew::FkSolutionSet set = ew::direct_kinematics_all(g, q);
  ASSERT_EQ(set.solutions.size(), 4u);
  EXPECT_FALSE(set.degenerate_linear_factor);
  EXPECT_NEAR(set.principal_pitch, -0.070648521739638356, 1e-12);
  int spurious = 0;
  for (const auto& s : set.solutions) {
    EXPECT_NEAR(s.rpy.yaw, ew::kPi / 4.0, 1e-12);
    EXPECT_LE(std::abs(s.residuals[0]), 1e-9);
    EXPECT_LE(std::abs(s.residuals[1]), 1e-9);
    auto res = ew::closure_residuals(g, q, s.orientation);
    EXPECT_LE(std::abs(res[0]), 1e-9);
    EXPECT_LE(std::abs(res[1]), 1e-9);
    if (s.branch == ew::FkBranch::spurious) {
      ++spurious;
      EXPECT_NEAR(s.rpy.pitch, ew::kPi / 2.0, 1e-12);
    } else {
      EXPECT_NEAR(s.rpy.pitch, -0.070648521739638356, 1e-12);
      double expect_roll =
          s.roll_sign > 0 ? 0.14130148281337906 : -1.5679163880453018;
      EXPECT_NEAR(s.rpy.roll, expect_roll, 1e-12);
    }
  }
  EXPECT_EQ(spurious, 2);  // pitch = pi/2 appears exactly twice
}

TEST(DirectKinematics, HomeJointsTangentBranchGivesThree) {
  // At the home joints the spurious pitch branch is tangent in roll, so the
  // solution set has 3 distinct members, and the assembly-selected solution
  // is the home orientation itself.
  ew::MechanismGeometry g = pa();
  ew::FkSolutionSet set = ew::direct_kinematics_all(g, g.home.joints);
  EXPECT_EQ(set.solutions.size(), 3u);
  ew::FkSolution sel = ew::direct_kinematics(g, g.home.joints);
  EXPECT_LT(angle_between(sel.orientation, g.home.orientation), 1e-9);
  EXPECT_EQ(sel.roll_sign, +1);
}

TEST(DirectKinematics, OtherVariantsRejected) {
  ew::MechanismGeometry g = ew::make_geometry(ew::DesignVariant::parallel_axes);
  EXPECT_THROW(ew::direct_kinematics_all(g, g.home.joints),
               ew::invalid_geometry_error);
}

TEST(DirectKinematics, RoundTripIkFk) {
  ew::MechanismGeometry g = pa();
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> d12(-0.6, 1.0);
  std::uniform_real_distribution<double> d3(ew::kPi / 4.0 - 1.0,
                                            ew::kPi / 4.0 + 1.0);
  int checked = 0, skipped = 0, vertical = 0;
  for (int i = 0; i < 500; ++i) {
    ew::JointAngles q{d12(rng), d12(rng), d3(rng)};
    // Sets of fewer than four solutions are routine here (either roll pair
    // can be unreachable); the identity must hold for whatever is returned.
    ew::FkSolutionSet fs = ew::direct_kinematics_all(g, q);
    for (const auto& s : fs.solutions) {
      if (std::abs(s.rpy.pitch - ew::kPi / 2.0) < 1e-9) {
        // Vertical-pitch branch: the orientation only determines yaw minus
        // roll, so the joint-space preimage is a curve and joint recovery
        // is ill-posed; witness preimage membership through the closure
        // residuals instead.
        auto res = ew::closure_residuals(g, q, s.orientation);
        EXPECT_LE(std::abs(res[0]), 1e-9) << "pose " << i;
        EXPECT_LE(std::abs(res[1]), 1e-9) << "pose " << i;
        ++vertical;
        continue;
      }
      // Every regular FK orientation must hand the joints back through one
      // of its IK branches.
      ew::IkSolutionSet is = ew::inverse_kinematics_all(g, s.orientation);
      if (is.double_root[0] || is.double_root[1]) {
        ++skipped;  // this branch landed on an inverse tangency
        continue;
      }
      double best = 1e300;
      for (const auto& sol : is.solutions) {
        double dist = std::abs(ew::wrap_pi(sol.joints.t1 - q.t1)) +
                      std::abs(ew::wrap_pi(sol.joints.t2 - q.t2)) +
                      std::abs(ew::wrap_pi(sol.joints.t3 - q.t3));
        best = std::min(best, dist);
      }
      EXPECT_LT(best, 1e-9) << "pose " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 800);
  EXPECT_GT(vertical, 500);
  EXPECT_LT(skipped, 25);
}

// ---------------------------------------------------------------------------
// Numeric direct kinematics (all variants)

TEST(NumericFk, AgreesWithClosedFormNearHome) {
  ew::MechanismGeometry g = pa();
  ew::JointAngles q{0.1, 0.2, ew::kPi / 4.0 + 0.1};
  ew::FkSolution closed = ew::direct_kinematics(g, q);
  ew::NumericFkResult numeric = ew::direct_kinematics_numeric(g, q);
  EXPECT_LT(angle_between(closed.orientation, numeric.orientation), 1e-9);
  EXPECT_LE(std::abs(numeric.residuals[0]), 1e-9);
  EXPECT_LE(std::abs(numeric.residuals[1]), 1e-9);
}

TEST(NumericFk, SolvesEveryVariantRoundTrip) {
  for (ew::DesignVariant v :
       {ew::DesignVariant::parallel_axes, ew::DesignVariant::orthogonal_axes,
        ew::DesignVariant::parallel_actuators}) {
    ew::MechanismGeometry g = ew::make_geometry(v);
    // A mild reachable pose built by IK, then reproduced by numeric FK.
    ew::Orientation o = ew::rpy_to_orientation(ew::kPi / 4.0 + 0.15, 0.1,
                                               -0.08);
    ew::IkSolution s = ew::inverse_kinematics(g, o, g.home.mode);
    ew::NumericFkResult r = ew::direct_kinematics_numeric(g, s.joints);
    EXPECT_LT(angle_between(r.orientation, o), 1e-9) << ew::to_string(v);
  }
}

TEST(RecomputeHome, AdjustsCustomGeometry) {
  ew::MechanismGeometry g = pa();
  g.rod_length = 0.8;  // no longer closes at joints (0, 0, pi/4)
  ew::recompute_home(g);
  auto res = ew::closure_residuals(g, g.home.joints, g.home.orientation);
  EXPECT_LE(std::abs(res[0]), 1e-9);
  EXPECT_LE(std::abs(res[1]), 1e-9);
  EXPECT_LT(
      (g.home.orientation.matrix() - ew::rot_z(ew::kPi / 4.0)).cwiseAbs()
          .maxCoeff(),
      1e-12);
}
