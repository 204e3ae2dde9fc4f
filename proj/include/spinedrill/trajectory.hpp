#pragma once

#include "spinedrill/geometry.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinedrill {

/// Straight lead-in followed by a planar constant-curvature arc, parameterized
/// by arc length. The arc bends toward `bend_plane_normal x direction`.
struct Trajectory {
  Vec3 entry{0.0, 0.0, 0.0};
  Vec3 direction{1.0, 0.0, 0.0};
  Vec3 bend_plane_normal{0.0, 0.0, 1.0};
  double straight_length = 25.0;
  double curvature = 0.0;
  double total_length = 55.0;

  /// Throws DomainError when the frame is not orthonormal or lengths are inconsistent.
  void validate() const;

  /// Unit vector the arc turns toward.
  Vec3 bend_direction() const { return bend_plane_normal.cross(direction); }

  Vec3 point_at(double s) const;
  Vec3 tangent_at(double s) const;

  /// Same curve with the bend plane rotated about `direction` by `angle_rad`.
  Trajectory rolled(double angle_rad) const;
};

struct ScrewSpec {
  double diameter = 2.5;
  double length = 55.0;

  void validate() const;
};

double curvature_from_radius(double radius_mm);

/// Thrown by swept_screw_voxels when the screw leaves the grid.
class ScrewOutOfBounds : public std::runtime_error {
 public:
  ScrewOutOfBounds(const std::string& what, std::vector<VoxelCoord> escaping)
      : std::runtime_error(what), escaping_(std::move(escaping)) {}
  const std::vector<VoxelCoord>& escaping() const noexcept { return escaping_; }

 private:
  std::vector<VoxelCoord> escaping_;
};

/// Flat-ended tube of radius diameter/2 around the curve on s in [0, screw.length].
/// Returns sorted voxel indices whose centers fall inside. The curve is sampled
/// every min(spacing)/4.
std::vector<std::size_t> swept_screw_voxels(const Trajectory& trajectory, const ScrewSpec& screw,
                                            const GridGeometry& grid);

}  // namespace spinedrill
