#ifndef OBJMAP_PNG_IO_H_
#define OBJMAP_PNG_IO_H_

#include <cstdint>
#include <filesystem>

#include "objmap/geometry.h"

namespace objmap {

// Reads a single-channel 16-bit PNG. Throws ParseError on anything else.
Image<std::uint16_t> read_png16(const std::filesystem::path& path);

// Writes a single-channel 16-bit PNG.
void write_png16(const std::filesystem::path& path,
                 const Image<std::uint16_t>& image);

}  // namespace objmap

#endif  // OBJMAP_PNG_IO_H_
