#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beo/voxel.hpp"

namespace beo {

/// Orthographic camera orbiting the grid center. The up axis is +Z; azimuth 0
/// looks at the object from the -Y side ("front"), elevation tilts the camera
/// up toward +Z. `distance <= 0` means auto (2.5x the grid circumradius);
/// otherwise it must exceed the circumradius.
struct Camera {
  double azimuth_deg = 0.0;
  double elevation_deg = 20.0;
  double distance = 0.0;
  int width = 64;
  int height = 64;
};

/// Depth raster in [0,1]: 0 = background, hits map linearly from the far to
/// the near tangent plane of the grid's bounding sphere (nearest possible
/// hit = 1), floored at 1/65535 so a hit never collides with background.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major, row 0 = top

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Named azimuth/elevation sampling box for the experimental conditions.
struct ViewRegime {
  std::string name;
  double az_lo = 0.0, az_hi = 360.0;
  double el_lo = 0.0, el_hi = 45.0;

  static ViewRegime frontal() { return {"frontal", -30.0, 30.0, 10.0, 30.0}; }
  static ViewRegime varied() { return {"varied", 0.0, 360.0, 0.0, 45.0}; }
  static ViewRegime side_rear() { return {"side_rear", 120.0, 240.0, 10.0, 30.0}; }
  static ViewRegime by_name(const std::string& name);
};

/// Orthonormal camera frame plus the ray grid mapping; exposed so evaluation
/// code (and the test oracle) can construct the exact per-pixel rays.
struct CameraFrame {
  Vec3 origin_center;  // camera position at the image center
  Vec3 forward;        // unit view direction
  Vec3 right, up;      // image plane axes
  double half_width;   // ortho half-extent (grid circumradius)
  double t_near, t_far;

  Vec3 ray_origin(int px, int py, int image_w, int image_h) const;
};
CameraFrame camera_frame(const Camera& cam, const VoxelGrid& grid);

/// Per-pixel ray march (3D DDA); the depth of the first occupied cell is its
/// exact ray/AABB slab entry distance, mapped to (0,1]. Deterministic.
DepthImage render_depth(const VoxelGrid& grid, const Camera& cam);

/// Uniform azimuth/elevation draw from the regime box; deterministic per seed.
Camera sample_viewpoint(const ViewRegime& regime, std::uint64_t seed);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples), value =
/// round(depth * 65535).
void save_depth_pgm(const DepthImage& img, const std::string& path);
DepthImage load_depth_pgm(const std::string& path);

/// Raw raster: magic "DPTH", u32 width, u32 height, f32 row-major.
void save_depth_raw(const DepthImage& img, const std::string& path);
DepthImage load_depth_raw(const std::string& path);

/// Loads either format, sniffing the leading magic bytes.
DepthImage load_depth_image(const std::string& path);

}  // namespace beo
