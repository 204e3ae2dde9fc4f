#include "spinedrill/volume_io.hpp"

#include "spinedrill/errors.hpp"

#include <json.hpp>

#include <bit>
#include <fstream>

namespace spinedrill {

namespace {


std::filesystem::path strip_extension(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".f32raw") {
    auto base = path;
    base.replace_extension();
    return base;
  }
  return path;
}

std::filesystem::path with_suffix(std::filesystem::path base, const char* suffix) {
  base += suffix;
  return base;
}

std::uint32_t to_little(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) |
           (bits >> 24);
  }
  return bits;
}

}  // namespace

void write_volume(const DensityVolume& volume, const std::filesystem::path& base_path) {
  const auto base = strip_extension(base_path);
  const auto& g = volume.geometry();
  {
    std::ofstream raw(with_suffix(base, ".f32raw"), std::ios::binary);
    if (!raw) {
      throw std::runtime_error("cannot open " + with_suffix(base, ".f32raw").string());
    }
    std::vector<std::uint32_t> words(volume.hu().size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      words[i] = to_little(std::bit_cast<std::uint32_t>(volume.hu()[i]));
    }
    raw.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  }
  nlohmann::json sidecar;
  sidecar["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  sidecar["spacing_mm"] = {g.spacing.x(), g.spacing.y(), g.spacing.z()};
  sidecar["origin_mm"] = {g.origin.x(), g.origin.y(), g.origin.z()};
  std::ofstream js(with_suffix(base, ".json"));
  if (!js) {
    throw std::runtime_error("cannot open " + with_suffix(base, ".json").string());
  }
  js << sidecar.dump(2) << '\n';
}

DensityVolume read_volume(const std::filesystem::path& path) {
  const auto base = strip_extension(path);
  std::ifstream js(with_suffix(base, ".json"));
  if (!js) {
    throw SpecError("cannot read volume sidecar " + with_suffix(base, ".json").string());
  }
  GridGeometry g;
  try {
    const auto sidecar = nlohmann::json::parse(js);
    for (int a = 0; a < 3; ++a) {
      g.dims[a] = sidecar.at("dims").at(a).get<int>();
      g.spacing[a] = sidecar.at("spacing_mm").at(a).get<double>();
      g.origin[a] = sidecar.at("origin_mm").at(a).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("volume sidecar: ") + e.what());
  }
  g.validate();

  std::ifstream raw(with_suffix(base, ".f32raw"), std::ios::binary | std::ios::ate);
  if (!raw) {
    throw SpecError("cannot read volume data " + with_suffix(base, ".f32raw").string());
  }
  const auto bytes = static_cast<std::size_t>(raw.tellg());
  if (bytes != g.voxel_count() * sizeof(float)) {
    throw SpecError("volume data holds " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(g.voxel_count() * sizeof(float)));
  }
  raw.seekg(0);
  std::vector<std::uint32_t> words(g.voxel_count());
  raw.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  std::vector<float> hu(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    hu[i] = std::bit_cast<float>(to_little(words[i]));
  }
  return DensityVolume(g, std::move(hu));
}

}  // namespace spinedrill
