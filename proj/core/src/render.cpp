#include "beo/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "beo/detail/binio.hpp"
#include "beo/rng.hpp"

namespace beo {

namespace {

constexpr double kDegToRad = 0.017453292519943295;
constexpr float kHitFloor = 1.0f / 65535.0f;

}  // namespace

ViewRegime ViewRegime::by_name(const std::string& name) {
  if (name == "frontal") return frontal();
  if (name == "varied") return varied();
  if (name == "side_rear") return side_rear();
  throw std::invalid_argument("unknown view regime '" + name + "'");
}

Vec3 CameraFrame::ray_origin(int px, int py, int image_w, int image_h) const {
  const double ox = ((px + 0.5) / image_w * 2.0 - 1.0) * half_width;
  const double oy = (1.0 - (py + 0.5) / image_h * 2.0) * half_width;
  return origin_center + ox * right + oy * up;
}

CameraFrame camera_frame(const Camera& cam, const VoxelGrid& grid) {
  if (cam.width < 8 || cam.height < 8) {
    throw std::invalid_argument("camera image size must be at least 8x8");
  }
  const Vec3 center = 0.5 * (grid.bounds_lo + grid.bounds_hi);
  const double half = 0.5 * (grid.bounds_hi.x() - grid.bounds_lo.x());
  const double circumradius = half * std::sqrt(3.0);

  double distance = cam.distance;
  if (distance <= 0.0) {
    distance = 2.5 * circumradius;
  } else if (distance <= circumradius) {
    throw std::invalid_argument("camera distance inside the object bounding sphere");
  }

  const double az = cam.azimuth_deg * kDegToRad;
  const double el = cam.elevation_deg * kDegToRad;
  const Vec3 offset(std::cos(el) * std::sin(az), -std::cos(el) * std::cos(az), std::sin(el));

  CameraFrame f;
  f.forward = -offset;
  f.origin_center = center + distance * offset;
  Vec3 world_up(0.0, 0.0, 1.0);
  f.right = f.forward.cross(world_up).normalized();
  f.up = f.right.cross(f.forward);
  f.half_width = circumradius;
  f.t_near = distance - circumradius;
  f.t_far = distance + circumradius;
  return f;
}

DepthImage render_depth(const VoxelGrid& grid, const Camera& cam) {
  const CameraFrame frame = camera_frame(cam, grid);
  const int R = grid.resolution;
  const double s = grid.cell_size();
  const Vec3 lo = grid.bounds_lo;
  const Vec3 hi = grid.bounds_hi;
  const Vec3 dir = frame.forward;

  Vec3 inv_dir;
  for (int a = 0; a < 3; ++a) {
    inv_dir[a] = std::abs(dir[a]) > 0.0 ? 1.0 / dir[a] : std::numeric_limits<double>::infinity();
  }

  DepthImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.values.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0f);

  const double depth_range = frame.t_far - frame.t_near;

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const Vec3 o = frame.ray_origin(px, py, cam.width, cam.height);

      // Clip the ray against the grid cube.
      double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
      bool miss = false;
      for (int a = 0; a < 3 && !miss; ++a) {
        if (std::abs(dir[a]) > 0.0) {
          double ta = (lo[a] - o[a]) * inv_dir[a];
          double tb = (hi[a] - o[a]) * inv_dir[a];
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
          if (t0 > t1) miss = true;
        } else if (o[a] < lo[a] || o[a] > hi[a]) {
          miss = true;
        }
      }
      if (miss) continue;

      // DDA walk from the entry cell.
      const Vec3 entry = o + t0 * dir;
      int ix = std::clamp(static_cast<int>(std::floor((entry.x() - lo.x()) / s)), 0, R - 1);
      int iy = std::clamp(static_cast<int>(std::floor((entry.y() - lo.y()) / s)), 0, R - 1);
      int iz = std::clamp(static_cast<int>(std::floor((entry.z() - lo.z()) / s)), 0, R - 1);

      int step[3];
      double t_max[3], t_delta[3];
      int idx[3] = {ix, iy, iz};
      for (int a = 0; a < 3; ++a) {
        if (dir[a] > 0.0) {
          step[a] = 1;
          t_max[a] = (lo[a] + (idx[a] + 1) * s - o[a]) * inv_dir[a];
          t_delta[a] = s * inv_dir[a];
        } else if (dir[a] < 0.0) {
          step[a] = -1;
          t_max[a] = (lo[a] + idx[a] * s - o[a]) * inv_dir[a];
          t_delta[a] = -s * inv_dir[a];
        } else {
          step[a] = 0;
          t_max[a] = std::numeric_limits<double>::infinity();
          t_delta[a] = std::numeric_limits<double>::infinity();
        }
      }

      double hit_t = -1.0;
      for (;;) {
        if (grid.at(idx[0], idx[1], idx[2])) {
          // Exact entry distance of the hit cell (slab test, axes in x,y,z
          // order); the DDA only decides *which* cell is hit.
          double t_enter = 0.0;
          for (int a = 0; a < 3; ++a) {
            if (std::abs(dir[a]) > 0.0) {
              const double bound = lo[a] + (dir[a] > 0.0 ? idx[a] : idx[a] + 1) * s;
              t_enter = std::max(t_enter, (bound - o[a]) * inv_dir[a]);
            }
          }
          hit_t = t_enter;
          break;
        }
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        idx[axis] += step[axis];
        if (idx[axis] < 0 || idx[axis] >= R) break;
        t_max[axis] += t_delta[axis];
      }

      if (hit_t >= 0.0) {
        double v = (frame.t_far - hit_t) / depth_range;
        v = std::min(v, 1.0);
        img.values[static_cast<std::size_t>(py) * cam.width + px] =
            std::max(static_cast<float>(v), kHitFloor);
      }
    }
  }
  return img;
}

Camera sample_viewpoint(const ViewRegime& regime, std::uint64_t seed) {
  Rng rng(seed);
  Camera cam;
  cam.azimuth_deg = rng.uniform(regime.az_lo, regime.az_hi);
  cam.elevation_deg = rng.uniform(regime.el_lo, regime.el_hi);
  cam.distance = 0.0;
  return cam;
}

void save_depth_pgm(const DepthImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (float v : img.values) {
    const auto q = static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
    const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                    static_cast<unsigned char>(q & 0xFF)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

DepthImage load_depth_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open image file");
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error(path + ": not a binary PGM (P5) file");
  auto next_int = [&]() {
    // Skip whitespace and '#' comment lines per the PGM grammar.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw std::runtime_error(path + ": malformed PGM header");
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (maxval != 65535) throw std::runtime_error(path + ": expected 16-bit PGM (maxval 65535)");
  in.get();  // single whitespace after maxval

  DepthImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.values.resize(static_cast<std::size_t>(w) * h);
  for (auto& v : img.values) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    if (!in) throw std::runtime_error(path + ": truncated PGM pixel data");
    v = static_cast<float>((bytes[0] << 8 | bytes[1]) / 65535.0);
  }
  return img;
}

void save_depth_raw(const DepthImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_magic(out, "DPTH");
  detail::write_u32le(out, static_cast<std::uint32_t>(img.width));
  detail::write_u32le(out, static_cast<std::uint32_t>(img.height));
  detail::write_bytes(out, img.values.data(), sizeof(float) * img.values.size());
  if (!out) throw std::runtime_error(path + ": write failed");
}

DepthImage load_depth_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open image file");
  detail::expect_magic(in, "DPTH", path);
  DepthImage img;
  img.width = static_cast<int>(detail::read_u32le(in, "width"));
  img.height = static_cast<int>(detail::read_u32le(in, "height"));
  if (img.width <= 0 || img.height <= 0 || img.width > 1 << 16 || img.height > 1 << 16) {
    throw std::runtime_error(path + ": implausible image size");
  }
  img.values.resize(static_cast<std::size_t>(img.width) * img.height);
  detail::read_bytes(in, img.values.data(), sizeof(float) * img.values.size(), "pixels");
  return img;
}

DepthImage load_depth_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error(path + ": cannot open image file");
  char head[4] = {0, 0, 0, 0};
  probe.read(head, 4);
  probe.close();
  if (head[0] == 'P' && head[1] == '5') return load_depth_pgm(path);
  if (std::string(head, 4) == "DPTH") return load_depth_raw(path);
  throw std::runtime_error(path + ": unknown depth image format (expected P5 PGM or DPTH)");
}

}  // namespace beo
