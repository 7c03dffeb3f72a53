#include "pwppe/phase_map.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "pwppe/binary_io.hpp"
#include "pwppe/pgm.hpp"

namespace pwppe {

namespace {
constexpr std::array<char, 4> kMagic{'P', 'M', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::size_t PhaseMap::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

std::string mask_path_for(const std::string& path) { return path + ".mask.pgm"; }

void save_phase_map(const std::string& path, const PhaseMap& map) {
  if (!map.mask.same_shape(map.values)) throw ShapeError("phase map mask does not match values");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  ByteWriter w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(map.width()));
  w.u32(static_cast<std::uint32_t>(map.height()));
  w.u32(static_cast<std::uint32_t>(map.kind));
  w.u32(0);  // reserved
  for (double v : map.values.data()) w.f64(v);
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("write failed: " + path);
  write_mask_pgm(mask_path_for(path), map.mask);
}

PhaseMap load_phase_map(const std::string& path) {
  ByteReader r(read_file_bytes(path), path);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError(path + ": bad PMAP magic", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw VersionMismatchError(path, version, kVersion);
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t kind = r.u32();
  r.u32();
  if (kind > 2) throw FormatError(path + ": unknown phase kind " + std::to_string(kind), 16);
  PhaseMap map(width, height, static_cast<PhaseKind>(kind));
  for (auto& v : map.values.data()) v = r.f64();
  if (!r.at_end()) throw FormatError(path + ": trailing bytes after PMAP payload", r.offset());
  map.mask = read_mask_pgm(mask_path_for(path));
  if (!map.mask.same_shape(map.values)) throw ShapeError(path + ": mask sidecar dimensions differ");
  return map;
}

}  // namespace pwppe
