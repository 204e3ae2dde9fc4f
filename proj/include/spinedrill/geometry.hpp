#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>

namespace spinedrill {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Integer voxel coordinate; may lie outside a grid (used for escape reports).
using VoxelCoord = std::array<std::int64_t, 3>;

/// Regular grid shared by density volumes and material fields.
/// Voxel (i,j,k) spans [origin + (i,j,k)*spacing, origin + (i+1,j+1,k+1)*spacing];
/// FE nodes sit on voxel corners.
struct GridGeometry {
  std::array<int, 3> dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  /// Throws SpecError unless dims >= 1 and spacing > 0 (finite).
  void validate() const;

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t node_count() const noexcept {
    return static_cast<std::size_t>(dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1);
  }
  std::size_t voxel_index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  std::size_t node_index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * (dims[1] + 1) + j) * (dims[0] + 1) + i;
  }
  std::array<int, 3> voxel_coord(std::size_t index) const noexcept {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
            static_cast<int>(index / (nx * ny))};
  }
  std::array<int, 3> node_coord(std::size_t index) const noexcept {
    const auto nx = static_cast<std::size_t>(dims[0] + 1);
    const auto ny = static_cast<std::size_t>(dims[1] + 1);
    return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
            static_cast<int>(index / (nx * ny))};
  }
  bool contains(const VoxelCoord& c) const noexcept {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < dims[0] && c[1] < dims[1] &&
           c[2] < dims[2];
  }
  Vec3 voxel_center(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return origin + Vec3((static_cast<double>(i) + 0.5) * spacing.x(),
                         (static_cast<double>(j) + 0.5) * spacing.y(),
                         (static_cast<double>(k) + 0.5) * spacing.z());
  }
  Vec3 node_position(int i, int j, int k) const noexcept {
    return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
  }
  Vec3 extent() const noexcept {
    return Vec3(dims[0] * spacing.x(), dims[1] * spacing.y(), dims[2] * spacing.z());
  }

  bool operator==(const GridGeometry& other) const noexcept {
    return dims == other.dims && spacing == other.spacing && origin == other.origin;
  }
};

}  // namespace spinedrill
