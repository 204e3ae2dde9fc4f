#include "doctest.h"

#include "spinedrill/ctsdr.hpp"
#include "spinedrill/errors.hpp"
#include "spinedrill/metrics.hpp"

#include <cmath>
#include <numbers>

using namespace spinedrill;

namespace {

TubePair guide() {
  TubePair t;
  t.springback_ratio = default_springback_ratio();
  return t;
}

InsertionProfile profile(double speed = 0.85) {
  InsertionProfile p;
  p.insertion_speed = speed;
  return p;
}

}  // namespace

TEST_SUITE("ctsdr") {

TEST_CASE("calibrate_springback") {
  CHECK(calibrate_springback(0.014388, 0.014065) == doctest::Approx(0.02245).epsilon(1e-3));
  CHECK(calibrate_springback(0.014388, 0.014065) == doctest::Approx(1.0 - 0.014065 / 0.014388).epsilon(1e-15));
  CHECK(calibrate_springback(0.03, 0.03) == 0.0);
  CHECK(calibrate_springback(0.02, 0.01) == 0.5);
  CHECK_THROWS_AS(calibrate_springback(0.01, 0.02), DomainError);
  CHECK_THROWS_AS(calibrate_springback(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(calibrate_springback(0.01, -0.001), DomainError);
  CHECK(default_springback_ratio() == calibrate_springback(kPlannedGuideCurvature, kMeasuredGuideCurvature));
}

TEST_CASE("achieved curvature never exceeds the set curvature") {
  for (double r : {0.0, 0.02245, 0.3, 0.999}) {
    TubePair t;
    t.springback_ratio = r;
    CHECK(t.achieved_curvature() <= t.set_curvature);
    CHECK(t.achieved_curvature() == doctest::Approx(t.set_curvature * (1 - r)).epsilon(1e-15));
  }
  TubePair bad;
  bad.springback_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad.springback_ratio = -0.1;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  TubePair housed;
  housed.inner_length = 100.0;  // longer than the outer tube is allowed
  CHECK_NOTHROW(housed.validate());
}

TEST_CASE("deploy trivial cases") {
  TubePair t = guide();
  t.mouth = Vec3(1, 2, 3);
  const DeployedShape zero = deploy(t, 0.0);
  CHECK(zero.exposed.empty());
  CHECK((zero.tip.position - t.mouth).norm() == 0.0);
  CHECK((zero.tip.tangent - t.direction).norm() == 0.0);

  TubePair flat = t;
  flat.set_curvature = 0.0;
  const DeployedShape s = deploy(flat, 30.0);
  CHECK((s.tip.position - (t.mouth + 30.0 * t.direction)).norm() < 1e-12);

  CHECK_THROWS_AS(deploy(t, -0.1), DomainError);
  CHECK_THROWS_AS(deploy(t, 70.1), DomainError);
}

TEST_CASE("deploy matches the trajectory arc formula") {
  TubePair t;
  t.set_curvature = 0.014065;
  const DeployedShape s = deploy(t, 45.0);
  Trajectory ref;
  ref.straight_length = 0.0;
  ref.curvature = 0.014065;
  ref.total_length = 45.0;
  CHECK((s.tip.position - ref.point_at(45.0)).norm() < 1e-9);
  CHECK((s.tip.tangent - ref.tangent_at(45.0)).norm() < 1e-12);
  // tip arc length from the mouth is the insertion: angle k*s on a circle of radius 1/k
  const double k = 0.014065;
  CHECK(s.tip.position.x() == doctest::Approx(std::sin(k * 45.0) / k).epsilon(1e-12));
  CHECK(s.tip.position.y() == doctest::Approx((1 - std::cos(k * 45.0)) / k).epsilon(1e-12));
  CHECK(s.exposed.front() == t.mouth);
  CHECK((s.exposed.back() - s.tip.position).norm() == 0.0);
}

TEST_CASE("exposed arc is tangent-continuous at the mouth") {
  TubePair t = guide();
  t.direction = Vec3(0, 0.6, 0.8);
  t.bend_plane_normal = Vec3(1, 0, 0);
  CHECK((t.exposed_arc(10.0).tangent_at(0.0) - t.direction).norm() < 1e-12);
  const DeployedShape s = deploy(t, 1e-6, 1e-7);
  CHECK((s.tip.tangent - t.direction).norm() < 1e-6 * t.achieved_curvature() * (1 + 1e-6));
  for (double ins : {5.0, 20.0, 70.0}) {
    const DeployedShape d = deploy(t, ins);
    double len = 0.0;
    for (std::size_t i = 1; i < d.exposed.size(); ++i) len += (d.exposed[i] - d.exposed[i - 1]).norm();
    CHECK(len == doctest::Approx(ins).epsilon(1e-5));
  }
}

TEST_CASE("drill spec defaults and hole widths") {
  CHECK(DrillSpec::defaults(TipKind::OvalHead).hole_width() == doctest::Approx(8.3).epsilon(1e-12));
  CHECK(DrillSpec::defaults(TipKind::BallNose).hole_width() == doctest::Approx(7.83).epsilon(1e-12));
  CHECK(DrillSpec::defaults(TipKind::OvalHead, 6000).hole_width() ==
        DrillSpec::defaults(TipKind::OvalHead, 10600).hole_width());
  CHECK(tip_kind_from_string("ball_nose") == TipKind::BallNose);
  CHECK(to_string(TipKind::OvalHead) == "oval_head");
  CHECK_THROWS_AS(tip_kind_from_string("twist"), SpecError);
  DrillSpec d;
  d.rotational_speed_rpm = 0.0;
  CHECK_THROWS_AS(d.validate(), DomainError);
}

TEST_CASE("simulate_drill timing and sampling") {
  const DrillSimResult r = simulate_drill(guide(), profile(), DrillSpec{}, 0.0, 1);
  CHECK(r.drilling_time == doctest::Approx(52.94).epsilon(1e-4));
  CHECK(r.drilling_time * 0.85 == doctest::Approx(45.0).epsilon(1e-12));
  for (std::size_t i = 1; i < r.path.size(); ++i) CHECK(r.path[i].time_s > r.path[i - 1].time_s);
  CHECK(r.path.front().time_s == 0.0);
  CHECK(r.path.back().time_s == r.drilling_time);
  double len = 0.0;
  for (std::size_t i = 1; i < r.path.size(); ++i) len += (r.path[i].position - r.path[i - 1].position).norm();
  CHECK(std::abs(len / 0.85 - r.drilling_time) < 1e-6);
  CHECK(r.hole_width == doctest::Approx(8.3));
  CHECK(r.achieved_curvature == doctest::Approx(kMeasuredGuideCurvature).epsilon(1e-12));
}

TEST_CASE("simulate_drill preconditions") {
  InsertionProfile p = profile();
  p.travel = 71.0;
  CHECK_THROWS_AS(simulate_drill(guide(), p, DrillSpec{}, 0.0, 1), DomainError);
  CHECK_THROWS_AS(simulate_drill(guide(), profile(), DrillSpec{}, -0.1, 1), DomainError);
  p = profile(0.0);
  CHECK_THROWS_AS(simulate_drill(guide(), p, DrillSpec{}, 0.0, 1), DomainError);
}

TEST_CASE("noiseless path lies on the guide arc") {
  const DrillSimResult r = simulate_drill(guide(), profile(), DrillSpec{}, 0.0, 5);
  const CircleFit fit = fit_circle(r.points());
  CHECK(fit.curvature() == doctest::Approx(guide().achieved_curvature()).epsilon(1e-9));
  CHECK(std::abs(fit.radius - 71.1) < 0.05);
  CHECK(radius_error_percent(69.5, fit.radius) == doctest::Approx(2.30).epsilon(0.02));
}

TEST_CASE("seeding") {
  const auto a = simulate_drill(guide(), profile(), DrillSpec{}, 0.3, 42);
  const auto b = simulate_drill(guide(), profile(), DrillSpec{}, 0.3, 42);
  const auto c = simulate_drill(guide(), profile(), DrillSpec{}, 0.3, 43);
  REQUIRE(a.path.size() == b.path.size());
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.path.size(); ++i) {
    same &= a.path[i].position == b.path[i].position;
    differs |= a.path[i].position != c.path[i].position;
  }
  CHECK(same);
  CHECK(differs);
  const auto q1 = simulate_drill(guide(), profile(), DrillSpec{}, 0.0, 1);
  const auto q2 = simulate_drill(guide(), profile(), DrillSpec{}, 0.0, 999);
  for (std::size_t i = 0; i < q1.path.size(); ++i) CHECK(q1.path[i].position == q2.path[i].position);
}

TEST_CASE("branch drilling") {
  const TubePair t = guide();
  std::vector<BranchProfile> two{{profile(), 0.0}, {profile(), std::numbers::pi}};
  const auto mirror = branch_drill(t, two, DrillSpec{}, 0.0, 1);
  REQUIRE(mirror.branches.size() == 2);
  CHECK(mirror.warnings.empty());
  const auto& p0 = mirror.branches[0].path;
  const auto& p1 = mirror.branches[1].path;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    const Vec3 d0 = p0[i].position - t.mouth, d1 = p1[i].position - t.mouth;
    CHECK(std::abs(d0.dot(t.direction) - d1.dot(t.direction)) < 1e-12);
    CHECK((d0 - d0.dot(t.direction) * t.direction + d1 - d1.dot(t.direction) * t.direction).norm() < 1e-12);
  }
  CHECK(mirror.branches[1].roll_angle_rad == std::numbers::pi);

  std::vector<BranchProfile> three{{profile(), 0.0}, {profile(1.25), 2.0}, {profile(0.5), 4.0}};
  const auto clean = branch_drill(t, three, DrillSpec{}, 0.0, 1);
  for (const auto& b : clean.branches) {
    CHECK((b.path.front().position - t.mouth).norm() == 0.0);
    CHECK(std::abs(fit_circle(b.points()).radius - 1.0 / t.achieved_curvature()) < 1e-6);
  }

  const auto noisy = branch_drill(t, three, DrillSpec{}, 0.3, 10);
  CHECK(noisy.branches[1].seed == 11);
  double mean = 0.0;
  for (const auto& b : noisy.branches) mean += fit_circle(b.points()).radius / 3.0;
  CHECK(std::abs(mean - 71.1) / 71.1 < 0.02);

  std::vector<BranchProfile> dup{{profile(), 0.5}, {profile(), 0.5 + 2 * std::numbers::pi}};
  CHECK(branch_drill(t, dup, DrillSpec{}, 0.0, 1).warnings.size() == 1);
  CHECK_THROWS_AS(branch_drill(t, {{profile(), 0.0}}, DrillSpec{}, 0.0, 1), DomainError);
}

}
