#include "beo/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "beo/detail/binio.hpp"

namespace beo {

namespace {

// Triangle/axis-aligned-box overlap, separating axis test (13 axes).
// Box given by center c and half-extents h; triangle by vertices v0,v1,v2.
bool tri_box_overlap(const Vec3& c, const Vec3& h, Vec3 v0, Vec3 v1, Vec3 v2) {
  v0 -= c;
  v1 -= c;
  v2 -= c;

  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;

  auto axis_test = [&](const Vec3& a, double r) {
    double p0 = a.dot(v0), p1 = a.dot(v1), p2 = a.dot(v2);
    double lo = std::min({p0, p1, p2});
    double hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
  };

  // 9 cross-product axes between triangle edges and box axes.
  const Vec3 edges[3] = {e0, e1, e2};
  for (const Vec3& e : edges) {
    Vec3 ax(0, -e.z(), e.y());
    if (axis_test(ax, h.y() * std::abs(e.z()) + h.z() * std::abs(e.y()))) return false;
    Vec3 ay(e.z(), 0, -e.x());
    if (axis_test(ay, h.x() * std::abs(e.z()) + h.z() * std::abs(e.x()))) return false;
    Vec3 az(-e.y(), e.x(), 0);
    if (axis_test(az, h.x() * std::abs(e.y()) + h.y() * std::abs(e.x()))) return false;
  }

  // Box face normals: reduces to AABB overlap of the triangle's bbox.
  for (int i = 0; i < 3; ++i) {
    double lo = std::min({v0[i], v1[i], v2[i]});
    double hi = std::max({v0[i], v1[i], v2[i]});
    if (lo > h[i] || hi < -h[i]) return false;
  }

  // Triangle plane.
  Vec3 n = e0.cross(e1);
  double d = n.dot(v0);
  double r = h.x() * std::abs(n.x()) + h.y() * std::abs(n.y()) + h.z() * std::abs(n.z());
  return std::abs(d) <= r;
}

}  // namespace

VoxelGrid VoxelGrid::empty(int resolution) {
  if (resolution < 1) throw std::invalid_argument("voxel grid resolution must be >= 1");
  VoxelGrid g;
  g.resolution = resolution;
  g.occupancy.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
  g.bounds_lo = Vec3(-0.5, -0.5, -0.5);
  g.bounds_hi = Vec3(0.5, 0.5, 0.5);
  return g;
}

Vec3 VoxelGrid::cell_lo(int x, int y, int z) const {
  double s = cell_size();
  return bounds_lo + Vec3(x * s, y * s, z * s);
}

Vec3 VoxelGrid::cell_center(int x, int y, int z) const {
  double s = cell_size();
  return bounds_lo + Vec3((x + 0.5) * s, (y + 0.5) * s, (z + 0.5) * s);
}

std::size_t VoxelGrid::occupied_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : occupancy) n += v;
  return n;
}

VoxelGrid voxelize(const TriMesh& mesh, int resolution) {
  if (resolution < 2) throw std::invalid_argument("voxelize: resolution must be >= 2");
  if (mesh.faces.empty()) throw std::invalid_argument("voxelize: mesh has no faces");

  const Vec3 lo = mesh.bbox_min();
  const Vec3 hi = mesh.bbox_max();
  const Vec3 extent = hi - lo;
  if (!(extent.minCoeff() > 0.0)) {
    throw std::invalid_argument("voxelize: degenerate mesh (zero volume bounding box)");
  }

  // Cubified bounds, 5% padded, centered on the mesh.
  const double half = 0.5 * extent.maxCoeff() * 1.05;
  const Vec3 center = 0.5 * (lo + hi);

  VoxelGrid grid;
  grid.resolution = resolution;
  grid.bounds_lo = center - Vec3::Constant(half);
  grid.bounds_hi = center + Vec3::Constant(half);
  grid.occupancy.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);

  const double s = grid.cell_size();
  const Vec3 h = Vec3::Constant(0.5 * s);

  // Surface pass: mark every cell whose box overlaps a triangle.
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];

    Vec3 tlo = a.cwiseMin(b).cwiseMin(c);
    Vec3 thi = a.cwiseMax(b).cwiseMax(c);
    int cx0 = std::max(0, static_cast<int>(std::floor((tlo.x() - grid.bounds_lo.x()) / s)));
    int cy0 = std::max(0, static_cast<int>(std::floor((tlo.y() - grid.bounds_lo.y()) / s)));
    int cz0 = std::max(0, static_cast<int>(std::floor((tlo.z() - grid.bounds_lo.z()) / s)));
    int cx1 = std::min(resolution - 1, static_cast<int>(std::floor((thi.x() - grid.bounds_lo.x()) / s)));
    int cy1 = std::min(resolution - 1, static_cast<int>(std::floor((thi.y() - grid.bounds_lo.y()) / s)));
    int cz1 = std::min(resolution - 1, static_cast<int>(std::floor((thi.z() - grid.bounds_lo.z()) / s)));

    for (int x = cx0; x <= cx1; ++x) {
      for (int y = cy0; y <= cy1; ++y) {
        for (int z = cz0; z <= cz1; ++z) {
          if (grid.at(x, y, z)) continue;
          Vec3 cc = grid.cell_center(x, y, z);
          if (tri_box_overlap(cc, h, a, b, c)) grid.set(x, y, z, true);
        }
      }
    }
  }

  // Interior pass: 6-connected flood fill of empty cells from the grid
  // boundary; whatever it cannot reach is enclosed and becomes occupied.
  const int R = resolution;
  std::vector<std::uint8_t> outside(grid.occupancy.size(), 0);
  std::vector<int> stack;
  auto push_if_empty = [&](int x, int y, int z) {
    int i = grid.index(x, y, z);
    if (!grid.occupancy[static_cast<std::size_t>(i)] && !outside[static_cast<std::size_t>(i)]) {
      outside[static_cast<std::size_t>(i)] = 1;
      stack.push_back(i);
    }
  };
  for (int a = 0; a < R; ++a) {
    for (int b = 0; b < R; ++b) {
      push_if_empty(0, a, b);
      push_if_empty(R - 1, a, b);
      push_if_empty(a, 0, b);
      push_if_empty(a, R - 1, b);
      push_if_empty(a, b, 0);
      push_if_empty(a, b, R - 1);
    }
  }
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    int z = i % R;
    int y = (i / R) % R;
    int x = i / (R * R);
    if (x > 0) push_if_empty(x - 1, y, z);
    if (x < R - 1) push_if_empty(x + 1, y, z);
    if (y > 0) push_if_empty(x, y - 1, z);
    if (y < R - 1) push_if_empty(x, y + 1, z);
    if (z > 0) push_if_empty(x, y, z - 1);
    if (z < R - 1) push_if_empty(x, y, z + 1);
  }
  for (std::size_t i = 0; i < grid.occupancy.size(); ++i) {
    if (!outside[i]) grid.occupancy[i] = 1;
  }
  return grid;
}

FlatObjectVector flatten(const VoxelGrid& grid) {
  FlatObjectVector v(static_cast<Eigen::Index>(grid.cell_count()));
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    v[static_cast<Eigen::Index>(i)] = grid.occupancy[i] ? 1.0 : 0.0;
  }
  return v;
}

VoxelGrid unflatten(const FlatObjectVector& vec, int resolution, double threshold) {
  if (resolution < 1) throw std::invalid_argument("unflatten: resolution must be >= 1");
  std::size_t expect = static_cast<std::size_t>(resolution) * resolution * resolution;
  if (static_cast<std::size_t>(vec.size()) != expect) {
    throw std::invalid_argument("unflatten: vector length " + std::to_string(vec.size()) +
                                " does not match resolution^3 = " + std::to_string(expect));
  }
  VoxelGrid g = VoxelGrid::empty(resolution);
  for (std::size_t i = 0; i < expect; ++i) {
    g.occupancy[i] = vec[static_cast<Eigen::Index>(i)] >= threshold ? 1 : 0;
  }
  return g;
}

void save_voxel_grid(const VoxelGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_magic(out, "VXGR");
  detail::write_u32le(out, static_cast<std::uint32_t>(grid.resolution));
  std::size_t n = grid.cell_count();
  std::vector<std::uint8_t> packed((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.occupancy[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  detail::write_bytes(out, packed.data(), packed.size());
  if (!out) throw std::runtime_error(path + ": write failed");
}

VoxelGrid load_voxel_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open voxel grid file");
  detail::expect_magic(in, "VXGR", path);
  std::uint32_t r = detail::read_u32le(in, "resolution");
  if (r < 1 || r > 4096) throw std::runtime_error(path + ": implausible resolution");
  VoxelGrid g = VoxelGrid::empty(static_cast<int>(r));
  std::size_t n = g.cell_count();
  std::vector<std::uint8_t> packed((n + 7) / 8);
  detail::read_bytes(in, packed.data(), packed.size(), "occupancy bits");
  for (std::size_t i = 0; i < n; ++i) {
    g.occupancy[i] = (packed[i / 8] >> (i % 8)) & 1u;
  }
  return g;
}

TriMesh voxel_surface_mesh(const VoxelGrid& grid) {
  TriMesh mesh;
  const int R = grid.resolution;
  auto occupied = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= R || y >= R || z >= R) return false;
    return grid.at(x, y, z);
  };
  // Emit two triangles per exposed face.
  auto quad = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), {a, b, c, d});
    mesh.faces.push_back({base, base + 1, base + 2});
    mesh.faces.push_back({base, base + 2, base + 3});
  };
  const double s = grid.cell_size();
  for (int x = 0; x < R; ++x) {
    for (int y = 0; y < R; ++y) {
      for (int z = 0; z < R; ++z) {
        if (!occupied(x, y, z)) continue;
        Vec3 lo = grid.cell_lo(x, y, z);
        Vec3 hi = lo + Vec3::Constant(s);
        if (!occupied(x - 1, y, z))
          quad({lo.x(), lo.y(), lo.z()}, {lo.x(), lo.y(), hi.z()}, {lo.x(), hi.y(), hi.z()},
               {lo.x(), hi.y(), lo.z()});
        if (!occupied(x + 1, y, z))
          quad({hi.x(), lo.y(), lo.z()}, {hi.x(), hi.y(), lo.z()}, {hi.x(), hi.y(), hi.z()},
               {hi.x(), lo.y(), hi.z()});
        if (!occupied(x, y - 1, z))
          quad({lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), hi.z()},
               {lo.x(), lo.y(), hi.z()});
        if (!occupied(x, y + 1, z))
          quad({lo.x(), hi.y(), lo.z()}, {lo.x(), hi.y(), hi.z()}, {hi.x(), hi.y(), hi.z()},
               {hi.x(), hi.y(), lo.z()});
        if (!occupied(x, y, z - 1))
          quad({lo.x(), lo.y(), lo.z()}, {lo.x(), hi.y(), lo.z()}, {hi.x(), hi.y(), lo.z()},
               {hi.x(), lo.y(), lo.z()});
        if (!occupied(x, y, z + 1))
          quad({lo.x(), lo.y(), hi.z()}, {hi.x(), lo.y(), hi.z()}, {hi.x(), hi.y(), hi.z()},
               {lo.x(), hi.y(), hi.z()});
      }
    }
  }
  return mesh;
}

}  // namespace beo
