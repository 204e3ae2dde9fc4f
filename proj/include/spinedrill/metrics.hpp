#pragma once

#include "spinedrill/geometry.hpp"
#include "spinedrill/trajectory.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinedrill {

struct BiomechanicalReport {
  std::string trajectory_id;
  double max_von_mises_mpa = 0.0;
  double max_principal_strain = 0.0;
  bool in_bone = false;
  bool curvature_achievable = false;
  std::vector<std::string> reasons;  ///< why a flag is false
  bool feasible() const noexcept { return in_bone && curvature_achievable; }
};

struct Plane {
  Vec3 point{0.0, 0.0, 0.0};
  Vec3 normal{0.0, 0.0, 1.0};
};

struct CircleFit {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 0.0;  ///< +inf when `straight`
  Vec3 normal{0.0, 0.0, 1.0};
  bool straight = false;
  int iterations = 0;

  double curvature() const noexcept { return straight ? 0.0 : 1.0 / radius; }
};

struct PathDeviation {
  double std_mm = 0.0;
  double max_mm = 0.0;
  std::vector<double> distances;
};

struct PathErrorReport {
  double fitted_radius_mm = 0.0;
  double fitted_curvature_per_mm = 0.0;
  bool straight = false;
  double radius_error_vs_planned_pct = 0.0;
  double radius_error_vs_guide_pct = 0.0;
  double deviation_std_mm = 0.0;
  double deviation_max_mm = 0.0;
};

/// 100 (baseline - candidate) / baseline.
double improvement_percent(double baseline, double candidate);

/// 100 |measured - reference| / reference.
double radius_error_percent(double reference_mm, double measured_mm);

/// Least-squares plane through the points (normal = smallest principal axis).
Plane fit_plane(std::span<const Vec3> points);

/// Algebraic (Kasa) circle fit in the plane, refined by Gauss-Newton on the
/// orthogonal distances (at most 100 iterations, 1e-12 mm step tolerance).
/// Collinear input yields `straight = true`; fewer than 3 points throws DomainError.
CircleFit fit_circle(std::span<const Vec3> points, const std::optional<Plane>& plane = std::nullopt);

/// Distance from each point to the nearest point of `planned` on [0, total_length]
/// (coarse scan then golden-section refinement); population std and max.
PathDeviation path_deviation(std::span<const Vec3> measured, const Trajectory& planned);

PathErrorReport path_error_report(std::span<const Vec3> path, const Trajectory& planned,
                                  double guide_radius_mm);

}  // namespace spinedrill
