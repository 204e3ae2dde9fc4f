#include "spinedrill/trajectory.hpp"

#include "spinedrill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace spinedrill {

namespace {
constexpr double kFrameTolerance = 1e-12;
}

void Trajectory::validate() const {
  if (!entry.allFinite() || !direction.allFinite() || !bend_plane_normal.allFinite()) {
    throw DomainError("trajectory: non-finite pose");
  }
  if (std::abs(direction.norm() - 1.0) > kFrameTolerance) {
    throw DomainError("trajectory: direction must be a unit vector");
  }
  if (std::abs(bend_plane_normal.norm() - 1.0) > kFrameTolerance) {
    throw DomainError("trajectory: bend_plane_normal must be a unit vector");
  }
  if (std::abs(direction.dot(bend_plane_normal)) > kFrameTolerance) {
    throw DomainError("trajectory: bend_plane_normal must be orthogonal to direction");
  }
  if (!(straight_length >= 0.0) || !std::isfinite(straight_length)) {
    throw DomainError("trajectory: straight_length must be >= 0");
  }
  if (!(curvature >= 0.0) || !std::isfinite(curvature)) {
    throw DomainError("trajectory: curvature must be >= 0");
  }
  if (!(total_length > 0.0) || !std::isfinite(total_length)) {
    throw DomainError("trajectory: total_length must be > 0");
  }
  if (straight_length > total_length) {
    throw DomainError("trajectory: straight_length exceeds total_length");
  }
}

Vec3 Trajectory::point_at(double s) const {
  if (!(s >= 0.0 && s <= total_length)) {
    throw DomainError("point_at: arc length outside [0, total_length]");
  }
  if (s <= straight_length || curvature == 0.0) {
    return entry + s * direction;
  }
  const double t = s - straight_length;
  const double theta = curvature * t;
  const double half = std::sin(0.5 * theta);
  // 1 - cos(theta) = 2 sin^2(theta/2) keeps the lift accurate for small angles.
  return entry + straight_length * direction + (std::sin(theta) / curvature) * direction +
         (2.0 * half * half / curvature) * bend_direction();
}

Vec3 Trajectory::tangent_at(double s) const {
  if (!(s >= 0.0 && s <= total_length)) {
    throw DomainError("tangent_at: arc length outside [0, total_length]");
  }
  if (s <= straight_length || curvature == 0.0) {
    return direction;
  }
  const double theta = curvature * (s - straight_length);
  return std::cos(theta) * direction + std::sin(theta) * bend_direction();
}

Trajectory Trajectory::rolled(double angle_rad) const {
  Trajectory out = *this;
  out.bend_plane_normal = Eigen::AngleAxisd(angle_rad, direction) * bend_plane_normal;
  return out;
}

void ScrewSpec::validate() const {
  if (!(diameter > 0.0) || !std::isfinite(diameter)) {
    throw DomainError("screw: diameter must be > 0");
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw DomainError("screw: length must be > 0");
  }
}

double curvature_from_radius(double radius_mm) {
  if (!(radius_mm > 0.0) || !std::isfinite(radius_mm)) {
    throw DomainError("curvature_from_radius: radius must be > 0");
  }
  return 1.0 / radius_mm;
}

std::vector<std::size_t> swept_screw_voxels(const Trajectory& trajectory, const ScrewSpec& screw,
                                            const GridGeometry& grid) {
  trajectory.validate();
  screw.validate();
  grid.validate();
  if (screw.length > trajectory.total_length) {
    throw DomainError("swept_screw_voxels: screw longer than trajectory");
  }

  const double radius = 0.5 * screw.diameter;
  const double step_target = grid.spacing.minCoeff() / 4.0;
  const auto steps = static_cast<std::size_t>(std::ceil(screw.length / step_target));
  std::vector<Vec3> samples(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    const double s = n == steps ? screw.length : screw.length * static_cast<double>(n) / steps;
    samples[n] = trajectory.point_at(s);
  }
  const Vec3 start = samples.front();
  const Vec3 end = samples.back();
  const Vec3 start_tangent = trajectory.tangent_at(0.0);
  const Vec3 end_tangent = trajectory.tangent_at(screw.length);

  struct Nearest {
    double distance = std::numeric_limits<double>::infinity();
    std::size_t sample = 0;
  };
  std::map<VoxelCoord, Nearest> candidates;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Vec3& p = samples[n];
    VoxelCoord lo{};
    VoxelCoord hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<std::int64_t>(std::floor((p[a] - radius - grid.origin[a]) / grid.spacing[a]));
      hi[a] = static_cast<std::int64_t>(std::floor((p[a] + radius - grid.origin[a]) / grid.spacing[a]));
    }
    for (auto k = lo[2]; k <= hi[2]; ++k) {
      for (auto j = lo[1]; j <= hi[1]; ++j) {
        for (auto i = lo[0]; i <= hi[0]; ++i) {
          const double d = (grid.voxel_center(i, j, k) - p).norm();
          if (d > radius) continue;
          auto& slot = candidates[VoxelCoord{i, j, k}];
          if (d < slot.distance) {
            slot.distance = d;
            slot.sample = n;
          }
        }
      }
    }
  }

  std::vector<std::size_t> inside;
  std::vector<VoxelCoord> escaping;
  for (const auto& [coord, nearest] : candidates) {
    const Vec3 c = grid.voxel_center(coord[0], coord[1], coord[2]);
    if (nearest.sample == 0 && (c - start).dot(start_tangent) < 0.0) continue;
    if (nearest.sample == samples.size() - 1 && (c - end).dot(end_tangent) > 0.0) continue;
    if (!grid.contains(coord)) {
      escaping.push_back(coord);
      continue;
    }
    inside.push_back(grid.voxel_index(static_cast<int>(coord[0]), static_cast<int>(coord[1]),
                                      static_cast<int>(coord[2])));
  }
  if (!escaping.empty()) {
    std::ostringstream msg;
    msg << "screw leaves the grid through " << escaping.size() << " voxel(s), first at ("
        << escaping.front()[0] << ", " << escaping.front()[1] << ", " << escaping.front()[2]
        << ")";
    throw ScrewOutOfBounds(msg.str(), std::move(escaping));
  }
  std::sort(inside.begin(), inside.end());
  return inside;
}

}  // namespace spinedrill
