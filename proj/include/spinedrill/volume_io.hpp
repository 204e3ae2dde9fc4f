#pragma once

#include "spinedrill/volume.hpp"

#include <filesystem>

namespace spinedrill {

/// Writes `<base>.f32raw` (little-endian float32, x fastest) and `<base>.json`
/// (dims, spacing_mm, origin_mm). `base` is the path without extension.
void write_volume(const DensityVolume& volume, const std::filesystem::path& base);

/// Accepts the base path, the sidecar path or the raw path.
DensityVolume read_volume(const std::filesystem::path& path);

}  // namespace spinedrill
