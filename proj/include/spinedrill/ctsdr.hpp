#pragma once

#include "spinedrill/geometry.hpp"
#include "spinedrill/trajectory.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace spinedrill {

/// Guide tube radius after heat treatment targeting the planned 69.5 mm arc.
inline constexpr double kMeasuredGuideRadiusMm = 71.1;
inline constexpr double kPlannedGuideCurvature = 0.014388;  // 1/mm
inline constexpr double kMeasuredGuideCurvature = 0.014065;  // 1/mm

double calibrate_springback(double set_curvature, double achieved_curvature);

/// Spring-back ratio of the reference NiTi guide (0.014388 set, 0.014065 achieved).
double default_springback_ratio();

/// Rigid straight outer tube with a pre-curved inner tube. The base pose is the
/// outer tube mouth: `mouth`, its axis `direction`, and the bend plane normal.
struct TubePair {
  double outer_length = 80.0;
  double inner_length = 70.0;
  double set_curvature = kPlannedGuideCurvature;
  double springback_ratio = 0.0;
  Vec3 mouth{0.0, 0.0, 0.0};
  Vec3 direction{1.0, 0.0, 0.0};
  Vec3 bend_plane_normal{0.0, 0.0, 1.0};

  void validate() const;
  double achieved_curvature() const noexcept { return set_curvature * (1.0 - springback_ratio); }
  /// Exposed arc as a trajectory starting at the mouth.
  Trajectory exposed_arc(double length) const;
  TubePair rolled(double angle_rad) const;
};

struct TipPose {
  Vec3 position;
  Vec3 tangent;
};

struct DeployedShape {
  std::vector<Vec3> exposed;  ///< mouth to tip, empty when fully housed
  TipPose tip;
};

/// Exposed inner tube follows its achieved curvature from the mouth on
/// (outer tube assumed infinitely stiff). Shape sampled every `sample_step_mm`.
DeployedShape deploy(const TubePair& tubes, double insertion_mm, double sample_step_mm = 0.5);

enum class TipKind { OvalHead, BallNose };

std::string_view to_string(TipKind kind) noexcept;
TipKind tip_kind_from_string(std::string_view name);

struct DrillSpec {
  TipKind tip_kind = TipKind::OvalHead;
  double tip_diameter = 6.35;
  double rotational_speed_rpm = 8250.0;
  double runout_mm = 1.95;

  static DrillSpec defaults(TipKind kind, double rpm = 8250.0);
  void validate() const;
  /// Hole width = tip diameter + runout; runout does not depend on rpm.
  double hole_width() const noexcept { return tip_diameter + runout_mm; }
};

struct InsertionProfile {
  double insertion_speed = 0.85;  ///< mm/s
  double travel = 45.0;           ///< mm
  double sample_interval = 0.05;  ///< s

  void validate() const;
};

struct PathSample {
  double time_s;
  Vec3 position;
};

struct DrillSimResult {
  std::vector<PathSample> path;
  double achieved_curvature = 0.0;
  double drilling_time = 0.0;
  double hole_width = 0.0;
  std::uint64_t seed = 0;
  double roll_angle_rad = 0.0;

  std::vector<Vec3> points() const;
};

/// Tip positions sampled every profile.sample_interval (plus the end of travel),
/// each perturbed by isotropic Gaussian noise of std `noise_std_mm` per axis.
DrillSimResult simulate_drill(const TubePair& tubes, const InsertionProfile& profile,
                              const DrillSpec& drill, double noise_std_mm, std::uint64_t seed);

struct BranchProfile {
  InsertionProfile profile;
  double roll_angle_rad = 0.0;
};

struct BranchDrillResult {
  std::vector<DrillSimResult> branches;
  std::vector<std::string> warnings;
};

/// One simulate_drill per roll of the inner tube about the outer tube axis; branch i
/// uses seed + i.
BranchDrillResult branch_drill(const TubePair& tubes, const std::vector<BranchProfile>& profiles,
                               const DrillSpec& drill, double noise_std_mm, std::uint64_t seed);

}  // namespace spinedrill
