#ifndef OBJMAP_MESH_IO_H_
#define OBJMAP_MESH_IO_H_

#include <filesystem>
#include <iosfwd>

#include "objmap/marching_cubes.h"

namespace objmap {

// ASCII PLY with per-vertex position, label color (see label_color) and the
// raw label as an extra `label` property.
void write_ply(std::ostream& out, const TriangleMesh& mesh);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);

// Reads meshes written by write_ply.
TriangleMesh read_ply(const std::filesystem::path& path);

}  // namespace objmap

#endif  // OBJMAP_MESH_IO_H_
