#include "beo/mesh.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace beo {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
}

// Leading integer of an OBJ face vertex spec such as "3", "3/1" or "3/1/2".
int parse_face_index(const std::string& tok, const std::string& path, int line_no) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(path, line_no, "bad face index '" + tok + "'");
  }
  if (pos < tok.size() && tok[pos] != '/') {
    parse_fail(path, line_no, "bad face index '" + tok + "'");
  }
  return v;
}

void check_face(const std::array<int, 3>& f, std::size_t n_vertices, const std::string& path,
                int line_no) {
  for (int idx : f) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= n_vertices) {
      parse_fail(path, line_no,
                 "face index " + std::to_string(idx + 1) + " out of range (file has " +
                     std::to_string(n_vertices) + " vertices)");
    }
  }
}

TriMesh load_obj(std::istream& in, const std::string& path) {
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) parse_fail(path, line_no, "malformed vertex record");
      if (!v.allFinite()) parse_fail(path, line_no, "non-finite vertex coordinate");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(parse_face_index(tok, path, line_no) - 1);
      if (poly.size() < 3) parse_fail(path, line_no, "face with fewer than 3 vertices");
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        std::array<int, 3> f{poly[0], poly[i], poly[i + 1]};
        check_face(f, mesh.vertices.size(), path, line_no);
        mesh.faces.push_back(f);
      }
    }
    // Other records (vn, vt, o, g, s, usemtl, ...) are ignored.
  }
  return mesh;
}

TriMesh load_off(std::istream& in, const std::string& path) {
  // Token stream with line tracking for error messages.
  int line_no = 1;
  auto next_token = [&](const char* what) -> std::string {
    std::string tok;
    for (;;) {
      int c = in.peek();
      if (c == EOF) parse_fail(path, line_no, std::string("unexpected end of file, wanted ") + what);
      if (c == '\n') {
        ++line_no;
        in.get();
        continue;
      }
      if (std::isspace(c)) {
        in.get();
        continue;
      }
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        ++line_no;
        continue;
      }
      in >> tok;
      return tok;
    }
  };
  auto next_int = [&](const char* what) {
    std::string tok = next_token(what);
    try {
      return std::stoi(tok);
    } catch (const std::exception&) {
      parse_fail(path, line_no, "expected integer for " + std::string(what) + ", got '" + tok + "'");
    }
  };
  auto next_double = [&](const char* what) {
    std::string tok = next_token(what);
    try {
      return std::stod(tok);
    } catch (const std::exception&) {
      parse_fail(path, line_no, "expected number for " + std::string(what) + ", got '" + tok + "'");
    }
  };

  std::string header = next_token("OFF header");
  if (header != "OFF") parse_fail(path, line_no, "missing OFF header");
  int nv = next_int("vertex count");
  int nf = next_int("face count");
  next_int("edge count");
  if (nv < 0 || nf < 0) parse_fail(path, line_no, "negative counts in OFF header");

  TriMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) {
    Vec3 v(next_double("x"), next_double("y"), next_double("z"));
    if (!v.allFinite()) parse_fail(path, line_no, "non-finite vertex coordinate");
    mesh.vertices.push_back(v);
  }
  for (int i = 0; i < nf; ++i) {
    int n = next_int("face vertex count");
    if (n < 3) parse_fail(path, line_no, "face with fewer than 3 vertices");
    std::vector<int> poly(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) poly[static_cast<std::size_t>(j)] = next_int("face index");
    for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
      std::array<int, 3> f{poly[0], poly[j], poly[j + 1]};
      check_face(f, mesh.vertices.size(), path, line_no);
      mesh.faces.push_back(f);
    }
  }
  return mesh;
}

}  // namespace

Vec3 TriMesh::bbox_min() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (const Vec3& v : vertices) lo = lo.cwiseMin(v);
  return lo;
}

Vec3 TriMesh::bbox_max() const {
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const Vec3& v : vertices) hi = hi.cwiseMax(v);
  return hi;
}

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open mesh file");

  // Sniff: the first non-blank, non-comment line decides the format.
  std::string first;
  std::streampos start = in.tellg();
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (ls >> tok && tok[0] != '#') {
      first = tok;
      break;
    }
  }
  in.clear();
  in.seekg(start);
  if (first == "OFF") return load_off(in, path);
  if (first == "v" || first == "f" || first == "vn" || first == "vt") return load_obj(in, path);
  throw std::runtime_error(path + ": unrecognized mesh format (expected OBJ or OFF)");
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace beo
