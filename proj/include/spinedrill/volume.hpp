#pragma once

#include "spinedrill/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace spinedrill {

/// Segmentation thresholds and material constants for QCT-derived bone.
namespace bone {
inline constexpr double kVoidThresholdHu = 100.0;
inline constexpr double kCorticalThresholdHu = 1800.0;
inline constexpr double kDensitySlope = 1.122;
inline constexpr double kDensityIntercept = 47.0;
inline constexpr double kCancellousCoefficient = 0.63;
inline constexpr double kCorticalCoefficient = 1.89;
inline constexpr double kModulusExponent = 1.35;
inline constexpr double kScrewModulusMpa = 200000.0;
inline constexpr double kPoissonRatio = 0.3;
}  // namespace bone

enum class MaterialClass : std::uint8_t { Void = 0, Cancellous = 1, Cortical = 2, Screw = 3 };

std::string_view to_string(MaterialClass c) noexcept;

/// Calibrated CT volume in Hounsfield units, x-fastest storage.
class DensityVolume {
 public:
  DensityVolume(GridGeometry geometry, std::vector<float> hu);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::span<const float> hu() const noexcept { return hu_; }
  float hu_at(int i, int j, int k) const noexcept { return hu_[geometry_.voxel_index(i, j, k)]; }

  bool operator==(const DensityVolume& other) const = default;

 private:
  GridGeometry geometry_;
  std::vector<float> hu_;
};

/// Per-voxel material class and Young's modulus (MPa). Void voxels carry modulus 0.
class MaterialField {
 public:
  MaterialField(GridGeometry geometry, std::vector<MaterialClass> classes,
                std::vector<double> modulus, double poisson = bone::kPoissonRatio);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::span<const MaterialClass> classes() const noexcept { return classes_; }
  std::span<const double> modulus() const noexcept { return modulus_; }
  double poisson() const noexcept { return poisson_; }

  MaterialClass class_at(std::size_t voxel) const { return classes_.at(voxel); }
  double modulus_at(std::size_t voxel) const { return modulus_.at(voxel); }
  std::size_t count(MaterialClass c) const noexcept;

 private:
  GridGeometry geometry_;
  std::vector<MaterialClass> classes_;
  std::vector<double> modulus_;
  double poisson_;
};

struct LowDensityEllipsoid {
  Vec3 center_mm{0.0, 0.0, 0.0};
  Vec3 radii_mm{1.0, 1.0, 1.0};
  double hu = 120.0;
};

/// Rectangular vertebra stand-in: cortical shell around a cancellous core,
/// optionally with one low-BMD ellipsoid. The grid corner sits at the origin.
struct PhantomSpec {
  Vec3 size_mm{40.0, 40.0, 40.0};
  Vec3 spacing_mm{1.0, 1.0, 1.0};
  double cortical_thickness_mm = 2.0;
  double cancellous_hu = 400.0;
  double cortical_hu = 1800.0;
  std::optional<LowDensityEllipsoid> low_density;
  std::uint64_t seed = 0;
  double noise_hu = 0.0;

  /// Throws SpecError naming the offending field.
  void validate() const;
  GridGeometry geometry() const;
};

double hu_to_density(double hu);
double density_to_modulus(double rho, MaterialClass c);
MaterialClass classify(double hu);

DensityVolume generate_phantom(const PhantomSpec& spec);

/// Screw voxels override whatever bone class the HU value implies.
MaterialField build_material_field(const DensityVolume& volume,
                                   std::span<const std::size_t> screw_voxels);

}  // namespace spinedrill
