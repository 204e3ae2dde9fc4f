#pragma once

#include "spinedrill/geometry.hpp"
#include "spinedrill/planner.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spinedrill {

/// Von Mises heat map on the axis-aligned voxel slice through the trajectory entry
/// whose normal is closest to the bend plane normal. Colors saturate at `vmax_mpa`;
/// screw voxels are grey, void is left blank. The planned centerline is overlaid.
std::string stress_map_svg(const CandidateEvaluation& evaluation, double vmax_mpa = 10.0);

struct ArcTrace {
  std::string label;
  std::vector<Vec3> points;
};

/// Each trace drawn in its own best-fit plane, aligned at its first point, with
/// the fitted circle on top.
std::string arc_overlay_svg(const std::vector<ArcTrace>& traces, const std::string& title);

/// Fixed-width histogram over [lo, hi]; values outside are clamped to the end bins.
/// `band` is shaded when given.
std::string histogram_svg(const std::vector<double>& values, double lo, double hi, int bins,
                          const std::string& title, const std::string& x_label,
                          std::optional<std::pair<double, double>> band = std::nullopt);

}  // namespace spinedrill
