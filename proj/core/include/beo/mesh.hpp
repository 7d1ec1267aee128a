#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace beo {

using Vec3 = Eigen::Vector3d;

/// Triangle mesh in model units. Faces are 0-based vertex index triples.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  Vec3 bbox_min() const;
  Vec3 bbox_max() const;
};

/// Reads an OBJ (subset: `v`/`f`, polygon faces fan-triangulated, 1-based
/// indices) or OFF mesh. The format is picked from the file contents, not
/// the extension. Throws std::runtime_error with the offending line number
/// on parse failure, and when a face references a missing vertex.
TriMesh load_mesh(const std::string& path);

/// Writes the mesh as minimal OBJ (`v` and `f` records).
void save_obj(const TriMesh& mesh, const std::string& path);

}  // namespace beo
