#ifndef OBJMAP_MARCHING_CUBES_H_
#define OBJMAP_MARCHING_CUBES_H_

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "objmap/labels.h"
#include "objmap/volumetric_map.h"

namespace objmap {

// Indexed triangle mesh with one segment label per vertex.
struct TriangleMesh {
  std::vector<Eigen::Vector3f> vertices;
  std::vector<Label> vertex_labels;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  // Majority label of the triangle's vertices; the first vertex's label when
  // all three differ.
  Label triangle_label(size_t triangle) const;
};

// Edge→triangle table of the classic marching cubes case table.
extern const int kMarchingCubesTriangles[256][16];

// Marching cubes at the zero level over all allocated blocks. A cube is
// polygonized only when all eight corner voxels are observed. Vertices on the
// same grid edge are shared. Each vertex takes the label of the edge corner
// closer to the surface, falling back to the other corner when that one is
// unlabeled.
TriangleMesh extract_mesh(const SegmentMap& map);

// Triangles whose label is in `labels`, with unused vertices dropped.
TriangleMesh filter_mesh(const TriangleMesh& mesh,
                         const std::set<Label>& labels);

// One mesh per persistent instance, uniting all segments whose dominant
// instance is that instance. Instances without triangles are omitted.
std::map<InstanceLabel, TriangleMesh> extract_instance_meshes(
    const SegmentMap& map, const TriangleMesh& full_mesh);

}  // namespace objmap

#endif  // OBJMAP_MARCHING_CUBES_H_
