#include "spinedrill/volume.hpp"

#include "spinedrill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace spinedrill {

void GridGeometry::validate() const {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) {
      throw SpecError("dims." + std::string(kAxis[a]) + " must be >= 1");
    }
    if (!(std::isfinite(spacing[a]) && spacing[a] > 0.0)) {
      throw SpecError("spacing_mm." + std::string(kAxis[a]) + " must be finite and > 0");
    }
    if (!std::isfinite(origin[a])) {
      throw SpecError("origin_mm." + std::string(kAxis[a]) + " must be finite");
    }
  }
}

std::string_view to_string(MaterialClass c) noexcept {
  switch (c) {
    case MaterialClass::Void:
      return "void";
    case MaterialClass::Cancellous:
      return "cancellous";
    case MaterialClass::Cortical:
      return "cortical";
    case MaterialClass::Screw:
      return "screw";
  }
  return "unknown";
}

DensityVolume::DensityVolume(GridGeometry geometry, std::vector<float> hu)
    : geometry_(std::move(geometry)), hu_(std::move(hu)) {
  geometry_.validate();
  if (hu_.size() != geometry_.voxel_count()) {
    throw SpecError("hu array length " + std::to_string(hu_.size()) +
                    " does not match dims product " + std::to_string(geometry_.voxel_count()));
  }
  for (std::size_t v = 0; v < hu_.size(); ++v) {
    if (!std::isfinite(hu_[v])) {
      throw DomainError("non-finite HU at voxel " + std::to_string(v));
    }
  }
}

MaterialField::MaterialField(GridGeometry geometry, std::vector<MaterialClass> classes,
                             std::vector<double> modulus, double poisson)
    : geometry_(std::move(geometry)),
      classes_(std::move(classes)),
      modulus_(std::move(modulus)),
      poisson_(poisson) {
  geometry_.validate();
  const auto n = geometry_.voxel_count();
  if (classes_.size() != n || modulus_.size() != n) {
    throw SpecError("material field arrays do not match grid size");
  }
  if (!(poisson_ > -1.0 && poisson_ < 0.5)) {
    throw SpecError("poisson ratio must lie in (-1, 0.5)");
  }
  for (std::size_t v = 0; v < n; ++v) {
    const bool is_void = classes_[v] == MaterialClass::Void;
    if (is_void ? modulus_[v] != 0.0 : !(modulus_[v] > 0.0 && std::isfinite(modulus_[v]))) {
      throw SpecError("voxel " + std::to_string(v) + ": modulus inconsistent with class " +
                      std::string(to_string(classes_[v])));
    }
  }
}

std::size_t MaterialField::count(MaterialClass c) const noexcept {
  return static_cast<std::size_t>(std::count(classes_.begin(), classes_.end(), c));
}

double hu_to_density(double hu) {
  if (!std::isfinite(hu)) {
    throw DomainError("hu_to_density: HU must be finite");
  }
  return bone::kDensitySlope * hu + bone::kDensityIntercept;
}

double density_to_modulus(double rho, MaterialClass c) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw DomainError("density_to_modulus: density must be finite and > 0");
  }
  switch (c) {
    case MaterialClass::Cancellous:
      return bone::kCancellousCoefficient * std::pow(rho, bone::kModulusExponent);
    case MaterialClass::Cortical:
      return bone::kCorticalCoefficient * std::pow(rho, bone::kModulusExponent);
    case MaterialClass::Void:
    case MaterialClass::Screw:
      break;
  }
  throw UsageError("density_to_modulus: only cancellous and cortical moduli derive from density");
}

MaterialClass classify(double hu) {
  if (!std::isfinite(hu)) {
    throw DomainError("classify: HU must be finite");
  }
  if (hu < bone::kVoidThresholdHu) return MaterialClass::Void;
  if (hu < bone::kCorticalThresholdHu) return MaterialClass::Cancellous;
  return MaterialClass::Cortical;
}

void PhantomSpec::validate() const {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (!(std::isfinite(spacing_mm[a]) && spacing_mm[a] > 0.0)) {
      throw SpecError("spacing_mm." + std::string(kAxis[a]) + " must be finite and > 0");
    }
    if (!(std::isfinite(size_mm[a]) && size_mm[a] >= spacing_mm[a])) {
      throw SpecError("size_mm." + std::string(kAxis[a]) + " must be at least one voxel");
    }
  }
  if (!(cortical_thickness_mm >= 0.0)) {
    throw SpecError("cortical_thickness_mm must be >= 0");
  }
  if (2.0 * cortical_thickness_mm >= size_mm.minCoeff()) {
    throw SpecError("cortical_thickness_mm exceeds half the block size");
  }
  if (!(cortical_hu >= bone::kCorticalThresholdHu) || !std::isfinite(cortical_hu)) {
    throw SpecError("cortical_hu must be >= 1800");
  }
  if (!(cancellous_hu >= bone::kVoidThresholdHu && cancellous_hu < bone::kCorticalThresholdHu)) {
    throw SpecError("cancellous_hu must lie in [100, 1800)");
  }
  if (!(noise_hu >= 0.0) || !std::isfinite(noise_hu)) {
    throw SpecError("noise_hu must be finite and >= 0");
  }
  if (low_density) {
    if (!(low_density->hu >= bone::kVoidThresholdHu &&
          low_density->hu < bone::kCorticalThresholdHu)) {
      throw SpecError("low_density.hu must lie in [100, 1800)");
    }
    if (!(low_density->radii_mm.minCoeff() > 0.0) || !low_density->radii_mm.allFinite()) {
      throw SpecError("low_density.radii_mm must be > 0");
    }
    if (!low_density->center_mm.allFinite()) {
      throw SpecError("low_density.center_mm must be finite");
    }
  }
}

GridGeometry PhantomSpec::geometry() const {
  GridGeometry g;
  for (int a = 0; a < 3; ++a) {
    g.dims[a] = static_cast<int>(std::llround(size_mm[a] / spacing_mm[a]));
  }
  g.spacing = spacing_mm;
  g.origin = Vec3::Zero();
  return g;
}

namespace {

// Uniform in [-1, 1) from the top 53 bits; avoids the implementation-defined
// std::uniform_real_distribution so phantoms are identical across standard libraries.
double signed_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

}  // namespace

DensityVolume generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const GridGeometry g = spec.geometry();
  const Vec3 extent = g.extent();
  std::mt19937_64 rng(spec.seed);
  std::vector<float> hu(g.voxel_count());

  const float cancellous_hi = std::nextafter(static_cast<float>(bone::kCorticalThresholdHu), 0.0f);
  for (int k = 0; k < g.dims[2]; ++k) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vec3 c = g.voxel_center(i, j, k);
        const double wall = std::min(c.minCoeff(), (extent - c).minCoeff());
        const bool cortical = wall < spec.cortical_thickness_mm;
        double value = cortical ? spec.cortical_hu : spec.cancellous_hu;
        if (!cortical && spec.low_density) {
          const auto& e = *spec.low_density;
          if ((c - e.center_mm).cwiseQuotient(e.radii_mm).squaredNorm() <= 1.0) {
            value = e.hu;
          }
        }
        float out = static_cast<float>(value);
        if (spec.noise_hu > 0.0) {
          out = static_cast<float>(value + spec.noise_hu * signed_unit(rng));
          out = cortical ? std::max(out, static_cast<float>(bone::kCorticalThresholdHu))
                         : std::clamp(out, static_cast<float>(bone::kVoidThresholdHu),
                                      cancellous_hi);
        }
        hu[g.voxel_index(i, j, k)] = out;
      }
    }
  }
  return DensityVolume(g, std::move(hu));
}

MaterialField build_material_field(const DensityVolume& volume,
                                   std::span<const std::size_t> screw_voxels) {
  const auto& g = volume.geometry();
  const auto n = g.voxel_count();
  std::vector<MaterialClass> classes(n);
  std::vector<double> modulus(n, 0.0);
  const auto hu = volume.hu();
  for (std::size_t v = 0; v < n; ++v) {
    classes[v] = classify(hu[v]);
    if (classes[v] != MaterialClass::Void) {
      modulus[v] = density_to_modulus(hu_to_density(hu[v]), classes[v]);
    }
  }
  for (const auto v : screw_voxels) {
    if (v >= n) {
      throw IndexError("screw voxel index " + std::to_string(v) + " outside grid of " +
                       std::to_string(n) + " voxels");
    }
    classes[v] = MaterialClass::Screw;
    modulus[v] = bone::kScrewModulusMpa;
  }
  return MaterialField(g, std::move(classes), std::move(modulus));
}

}  // namespace spinedrill
