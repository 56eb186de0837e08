#ifndef OBJMAP_MAP_IO_H_
#define OBJMAP_MAP_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "objmap/volumetric_map.h"

namespace objmap {

inline constexpr std::uint32_t kMapFormatVersion = 1;

// Little-endian binary map file; the layout is described in
// docs/map_format.md. Output is byte-identical for equal maps.
std::string serialize_map(const SegmentMap& map);
SegmentMap deserialize_map(const std::string& bytes);

void save_map(const std::filesystem::path& path, const SegmentMap& map);
// Throws ParseError naming the expected format version on any corruption.
SegmentMap load_map(const std::filesystem::path& path);

}  // namespace objmap

#endif  // OBJMAP_MAP_IO_H_
