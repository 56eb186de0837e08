#include "objmap/mesh_io.h"

#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "objmap/geometry.h"

namespace objmap {

void write_ply(std::ostream& out, const TriangleMesh& mesh) {
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment objmap segment mesh\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property uint label\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar uint vertex_indices\n"
      << "end_header\n";
  char buffer[160];
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3f& v = mesh.vertices[i];
    const auto color = label_color(mesh.vertex_labels[i]);
    std::snprintf(buffer, sizeof(buffer), "%.6f %.6f %.6f %u %u %u %u\n",
                  v.x(), v.y(), v.z(), color[0], color[1], color[2],
                  mesh.vertex_labels[i]);
    out << buffer;
  }
  for (const auto& t : mesh.triangles) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_ply(out, mesh);
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

TriangleMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  std::string line;
  size_t n_vertices = 0;
  size_t n_faces = 0;
  if (!std::getline(in, line) || line != "ply") {
    throw ParseError(path.string() + " is not a PLY file");
  }
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream fields(line);
    std::string keyword, element;
    fields >> keyword;
    if (keyword == "format" && line != "format ascii 1.0") {
      throw ParseError("only ASCII PLY is supported");
    }
    if (keyword == "element") {
      size_t count = 0;
      fields >> element >> count;
      (element == "vertex" ? n_vertices : n_faces) = count;
    }
  }
  TriangleMesh mesh;
  mesh.vertices.reserve(n_vertices);
  for (size_t i = 0; i < n_vertices; ++i) {
    float x, y, z;
    unsigned r, g, b, label;
    if (!(in >> x >> y >> z >> r >> g >> b >> label)) {
      throw ParseError("truncated vertex list in " + path.string());
    }
    mesh.vertices.emplace_back(x, y, z);
    mesh.vertex_labels.push_back(label);
  }
  for (size_t i = 0; i < n_faces; ++i) {
    unsigned count;
    std::array<std::uint32_t, 3> t{};
    if (!(in >> count >> t[0] >> t[1] >> t[2]) || count != 3) {
      throw ParseError("bad face record in " + path.string());
    }
    mesh.triangles.push_back(t);
  }
  return mesh;
}

}  // namespace objmap
