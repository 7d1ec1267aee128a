#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beo/mesh.hpp"

namespace beo {

/// Flattened voxel occupancy, length V = R^3, layout index = x*R^2 + y*R + z.
/// Training vectors are binary; subspace reconstructions are real-valued.
using FlatObjectVector = Eigen::VectorXd;

/// Binary occupancy cube. `bounds_lo`/`bounds_hi` is the axis-aligned box the
/// grid covers in model units (always a cube, see voxelize).
struct VoxelGrid {
  int resolution = 0;
  std::vector<std::uint8_t> occupancy;  // resolution^3 values in {0,1}
  Vec3 bounds_lo = Vec3::Zero();
  Vec3 bounds_hi = Vec3::Ones();

  static VoxelGrid empty(int resolution);

  std::size_t cell_count() const { return occupancy.size(); }
  int index(int x, int y, int z) const {
    return (x * resolution + y) * resolution + z;
  }
  bool at(int x, int y, int z) const { return occupancy[static_cast<std::size_t>(index(x, y, z))] != 0; }
  void set(int x, int y, int z, bool v) {
    occupancy[static_cast<std::size_t>(index(x, y, z))] = v ? 1 : 0;
  }
  double cell_size() const { return (bounds_hi.x() - bounds_lo.x()) / resolution; }
  Vec3 cell_lo(int x, int y, int z) const;
  Vec3 cell_center(int x, int y, int z) const;
  std::size_t occupied_count() const;
};

/// Voxelizes a triangle mesh: cells overlapping any triangle are marked, then
/// everything unreachable from the grid boundary by 6-connected flood fill
/// through empty cells is filled as interior. Robust to non-watertight input.
/// Grid bounds are the mesh bounding box grown to a cube and padded by 5%.
/// Throws std::invalid_argument for resolution < 2 or a mesh whose bounding
/// box has zero volume.
VoxelGrid voxelize(const TriMesh& mesh, int resolution);

/// Grid -> flat vector in the fixed x-major layout. Values copied unchanged.
FlatObjectVector flatten(const VoxelGrid& grid);

/// Flat vector -> grid; occupancy = (value >= threshold). The grid gets unit
/// cube bounds centered at the origin (flat vectors carry no bounds).
VoxelGrid unflatten(const FlatObjectVector& vec, int resolution, double threshold = 0.5);

/// Voxel grid file: magic "VXGR", u32 little-endian resolution, then
/// ceil(R^3/8) bytes of occupancy bit-packed LSB-first in layout order.
void save_voxel_grid(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_voxel_grid(const std::string& path);

/// Cube-face mesh of the occupied region (faces between occupied and empty
/// cells), for visualizing reconstructions.
TriMesh voxel_surface_mesh(const VoxelGrid& grid);

}  // namespace beo
