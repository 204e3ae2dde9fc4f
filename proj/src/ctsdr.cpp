#include "spinedrill/ctsdr.hpp"

#include "spinedrill/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace spinedrill {

double calibrate_springback(double set_curvature, double achieved_curvature) {
  if (!(set_curvature > 0.0) || !(achieved_curvature > 0.0) || !std::isfinite(set_curvature)) {
    throw DomainError("calibrate_springback: curvatures must be > 0");
  }
  if (achieved_curvature > set_curvature) {
    throw DomainError("calibrate_springback: spring-back cannot increase curvature");
  }
  return 1.0 - achieved_curvature / set_curvature;
}

double default_springback_ratio() {
  return calibrate_springback(kPlannedGuideCurvature, kMeasuredGuideCurvature);
}

void TubePair::validate() const {
  if (!(outer_length > 0.0) || !(inner_length > 0.0)) {
    throw DomainError("tubes: lengths must be > 0");
  }
  if (!(set_curvature >= 0.0) || !std::isfinite(set_curvature)) {
    throw DomainError("tubes: set_curvature must be >= 0");
  }
  if (!(springback_ratio >= 0.0 && springback_ratio < 1.0)) {
    throw DomainError("tubes: springback_ratio must lie in [0, 1)");
  }
  exposed_arc(inner_length).validate();
}

Trajectory TubePair::exposed_arc(double length) const {
  Trajectory t;
  t.entry = mouth;
  t.direction = direction;
  t.bend_plane_normal = bend_plane_normal;
  t.straight_length = 0.0;
  t.curvature = achieved_curvature();
  t.total_length = length;
  return t;
}

TubePair TubePair::rolled(double angle_rad) const {
  TubePair out = *this;
  out.bend_plane_normal = Eigen::AngleAxisd(angle_rad, direction) * bend_plane_normal;
  return out;
}

DeployedShape deploy(const TubePair& tubes, double insertion_mm, double sample_step_mm) {
  tubes.validate();
  if (!(insertion_mm >= 0.0 && insertion_mm <= tubes.inner_length)) {
    throw DomainError("deploy: insertion outside [0, inner_length]");
  }
  if (!(sample_step_mm > 0.0)) throw DomainError("deploy: sample step must be > 0");
  DeployedShape shape;
  if (insertion_mm == 0.0) {
    shape.tip = {tubes.mouth, tubes.direction};
    return shape;
  }
  const Trajectory arc = tubes.exposed_arc(insertion_mm);
  const auto steps = static_cast<std::size_t>(std::ceil(insertion_mm / sample_step_mm));
  shape.exposed.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double s = i == steps ? insertion_mm : insertion_mm * static_cast<double>(i) / steps;
    shape.exposed.push_back(arc.point_at(s));
  }
  shape.tip = {arc.point_at(insertion_mm), arc.tangent_at(insertion_mm)};
  return shape;
}

std::string_view to_string(TipKind kind) noexcept {
  return kind == TipKind::OvalHead ? "oval_head" : "ball_nose";
}

TipKind tip_kind_from_string(std::string_view name) {
  if (name == "oval_head") return TipKind::OvalHead;
  if (name == "ball_nose") return TipKind::BallNose;
  throw SpecError("tip_kind must be \"oval_head\" or \"ball_nose\"");
}

DrillSpec DrillSpec::defaults(TipKind kind, double rpm) {
  DrillSpec d;
  d.tip_kind = kind;
  d.rotational_speed_rpm = rpm;
  if (kind == TipKind::OvalHead) {
    d.tip_diameter = 6.35;
    d.runout_mm = 1.95;
  } else {
    d.tip_diameter = 6.75;
    d.runout_mm = 1.08;
  }
  return d;
}

void DrillSpec::validate() const {
  if (!(tip_diameter > 0.0)) throw DomainError("drill: tip diameter must be > 0");
  if (!(rotational_speed_rpm > 0.0)) throw DomainError("drill: rotational speed must be > 0");
  if (!(runout_mm >= 0.0)) throw DomainError("drill: runout must be >= 0");
}

void InsertionProfile::validate() const {
  if (!(insertion_speed > 0.0) || !std::isfinite(insertion_speed)) {
    throw DomainError("profile: insertion speed must be > 0");
  }
  if (!(travel > 0.0) || !std::isfinite(travel)) throw DomainError("profile: travel must be > 0");
  if (!(sample_interval > 0.0) || !std::isfinite(sample_interval)) {
    throw DomainError("profile: sample interval must be > 0");
  }
}

std::vector<Vec3> DrillSimResult::points() const {
  std::vector<Vec3> out;
  out.reserve(path.size());
  for (const auto& s : path) out.push_back(s.position);
  return out;
}

DrillSimResult simulate_drill(const TubePair& tubes, const InsertionProfile& profile,
                              const DrillSpec& drill, double noise_std_mm, std::uint64_t seed) {
  tubes.validate();
  profile.validate();
  drill.validate();
  if (profile.travel > tubes.inner_length) {
    throw DomainError("simulate_drill: travel exceeds the inner tube length");
  }
  if (!(noise_std_mm >= 0.0) || !std::isfinite(noise_std_mm)) {
    throw DomainError("simulate_drill: noise std must be >= 0");
  }
  DrillSimResult out;
  out.achieved_curvature = tubes.achieved_curvature();
  out.drilling_time = profile.travel / profile.insertion_speed;
  out.hole_width = drill.hole_width();
  out.seed = seed;

  const Trajectory arc = tubes.exposed_arc(profile.travel);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto emit = [&](double t, double s) {
    Vec3 p = arc.point_at(std::min(s, profile.travel));
    if (noise_std_mm > 0.0) {
      const double nx = gauss(rng);
      const double ny = gauss(rng);
      const double nz = gauss(rng);
      p += noise_std_mm * Vec3(nx, ny, nz);
    }
    out.path.push_back({t, p});
  };
  const double end_time = out.drilling_time;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * profile.sample_interval;
    if (t >= end_time * (1.0 - 1e-12)) break;
    emit(t, t * profile.insertion_speed);
  }
  emit(end_time, profile.travel);
  return out;
}

BranchDrillResult branch_drill(const TubePair& tubes, const std::vector<BranchProfile>& profiles,
                               const DrillSpec& drill, double noise_std_mm, std::uint64_t seed) {
  if (profiles.size() < 2) throw DomainError("branch_drill: need at least two branches");
  BranchDrillResult out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double diff = std::remainder(profiles[i].roll_angle_rad - profiles[j].roll_angle_rad,
                                         2.0 * M_PI);
      if (std::abs(diff) < 1e-9) {
        std::ostringstream msg;
        msg << "branches " << j << " and " << i << " share roll angle "
            << profiles[i].roll_angle_rad << " rad";
        out.warnings.push_back(msg.str());
      }
    }
  }
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto result = simulate_drill(tubes.rolled(profiles[i].roll_angle_rad), profiles[i].profile,
                                 drill, noise_std_mm, seed + i);
    result.roll_angle_rad = profiles[i].roll_angle_rad;
    out.branches.push_back(std::move(result));
  }
  return out;
}

}  // namespace spinedrill
