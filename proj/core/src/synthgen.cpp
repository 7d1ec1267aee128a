#include "beo/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "beo/langground.hpp"

namespace beo {

namespace {

namespace fs = std::filesystem;

void add_box(TriMesh& mesh, const Vec3& lo, const Vec3& hi) {
  const int b = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(),
                       {{lo.x(), lo.y(), lo.z()},
                        {hi.x(), lo.y(), lo.z()},
                        {hi.x(), hi.y(), lo.z()},
                        {lo.x(), hi.y(), lo.z()},
                        {lo.x(), lo.y(), hi.z()},
                        {hi.x(), lo.y(), hi.z()},
                        {hi.x(), hi.y(), hi.z()},
                        {lo.x(), hi.y(), hi.z()}});
  const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                           {2, 3, 7, 6}, {1, 2, 6, 5}, {3, 0, 4, 7}};
  for (const auto& q : quads) {
    mesh.faces.push_back({b + q[0], b + q[1], b + q[2]});
    mesh.faces.push_back({b + q[0], b + q[2], b + q[3]});
  }
}

// Wedge: a box whose +z top face is collapsed toward one x end (hood slope).
void add_wedge_x(TriMesh& mesh, const Vec3& lo, const Vec3& hi, bool high_at_min_x) {
  const double zlo = lo.z();
  const double zhi = hi.z();
  const double xa = high_at_min_x ? lo.x() : hi.x();
  const int b = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), {{lo.x(), lo.y(), zlo},
                                             {hi.x(), lo.y(), zlo},
                                             {hi.x(), hi.y(), zlo},
                                             {lo.x(), hi.y(), zlo},
                                             {xa, lo.y(), zhi},
                                             {xa, hi.y(), zhi}});
  mesh.faces.push_back({b + 0, b + 2, b + 1});
  mesh.faces.push_back({b + 0, b + 3, b + 2});
  mesh.faces.push_back({b + 0, b + 1, b + 4});
  mesh.faces.push_back({b + 1, b + 5, b + 4});
  mesh.faces.push_back({b + 1, b + 2, b + 5});
  mesh.faces.push_back({b + 2, b + 3, b + 5});
  mesh.faces.push_back({b + 3, b + 0, b + 4});
  mesh.faces.push_back({b + 3, b + 4, b + 5});
}

double score_from_range(double v, std::pair<double, double> range) {
  return 1.0 + 4.0 * (v - range.first) / (range.second - range.first);
}

double extreme_uniform(Rng& rng) {
  return rng.uniform() < 0.5 ? rng.uniform(0.0, 0.25) : rng.uniform(0.75, 1.0);
}

std::string class_noun(ShapeClass cls) {
  switch (cls) {
    case ShapeClass::boxform:
      return "couch";
    case ShapeClass::slabform:
      return "car";
    case ShapeClass::wingform:
      return "plane";
  }
  return "object";
}

}  // namespace

ShapeClass shape_class_from_name(const std::string& name) {
  if (name == "boxform") return ShapeClass::boxform;
  if (name == "slabform") return ShapeClass::slabform;
  if (name == "wingform") return ShapeClass::wingform;
  throw std::invalid_argument("unknown shape class '" + name + "'");
}

std::string shape_class_name(ShapeClass cls) {
  switch (cls) {
    case ShapeClass::boxform:
      return "boxform";
    case ShapeClass::slabform:
      return "slabform";
    case ShapeClass::wingform:
      return "wingform";
  }
  return "?";
}

std::pair<double, double> ShapeParams::length_range(ShapeClass cls) {
  switch (cls) {
    case ShapeClass::boxform:
      return {0.9, 2.1};
    case ShapeClass::slabform:
      return {1.2, 2.6};
    case ShapeClass::wingform:
      return {1.2, 2.4};
  }
  return {1.0, 2.0};
}

std::pair<double, double> ShapeParams::height_range(ShapeClass cls) {
  switch (cls) {
    case ShapeClass::boxform:
      return {0.45, 1.05};
    case ShapeClass::slabform:
      return {0.18, 0.55};
    case ShapeClass::wingform:
      return {0.1, 0.5};
  }
  return {0.3, 1.0};
}

ShapeParams ShapeParams::sample(ShapeClass cls, Rng& rng) {
  ShapeParams p;
  p.cls = cls;
  const auto lr = length_range(cls);
  const auto hr = height_range(cls);
  p.length = lr.first + extreme_uniform(rng) * (lr.second - lr.first);
  p.height = hr.first + extreme_uniform(rng) * (hr.second - hr.first);
  p.has_arms = rng.uniform() < 0.5;
  p.curved = rng.uniform() < 0.5;
  const int seg_choices[4] = {0, 1, 3, 4};
  p.segments = seg_choices[rng.uniform_int(4)];
  p.seed = rng.next_u64();
  return p;
}

const std::vector<AttributePhrase>& attribute_phrases(ShapeClass cls) {
  static const std::vector<AttributePhrase> boxform = {
      {"long", "long", "short", false},
      {"bent", "bent", "straight", false},
      {"arms", "with arms", "with no arms", true},
      {"tall", "tall", "low", false},
  };
  static const std::vector<AttributePhrase> slabform = {
      {"long", "long", "short", false},
      {"sleek", "sleek", "boxy", false},
      {"tall", "tall", "low", false},
      {"wide", "wide", "narrow", false},
  };
  static const std::vector<AttributePhrase> wingform = {
      {"long", "long", "short", false},
      {"wide", "wide", "narrow", false},
      {"engines", "with many engines", "with few engines", true},
      {"tall", "tall", "low", false},
  };
  switch (cls) {
    case ShapeClass::boxform:
      return boxform;
    case ShapeClass::slabform:
      return slabform;
    case ShapeClass::wingform:
      return wingform;
  }
  return boxform;
}

std::vector<std::string> attribute_names(ShapeClass cls) {
  std::vector<std::string> names;
  for (const auto& a : attribute_phrases(cls)) names.push_back(a.name);
  return names;
}

std::pair<TriMesh, Eigen::VectorXd> generate_shape(const ShapeParams& params) {
  const auto lr = ShapeParams::length_range(params.cls);
  const auto hr = ShapeParams::height_range(params.cls);
  if (params.length < lr.first - 1e-9 || params.length > lr.second + 1e-9) {
    throw std::invalid_argument("generate_shape: length out of range for class");
  }
  if (params.height < hr.first - 1e-9 || params.height > hr.second + 1e-9) {
    throw std::invalid_argument("generate_shape: height out of range for class");
  }
  if (params.segments < 0 || params.segments > 4) {
    throw std::invalid_argument("generate_shape: segments out of range [0,4]");
  }

  Rng jitter(params.seed);
  TriMesh mesh;
  Eigen::VectorXd scores(4);
  const double L = params.length;
  const double H = params.height;

  switch (params.cls) {
    case ShapeClass::boxform: {
      const double depth = 0.68 + 0.06 * jitter.uniform();
      const double seat_h = 0.30 + 0.04 * jitter.uniform();
      const double arm_h = 0.55;
      const double arm_w = 0.16;
      const double back_t = 0.16;
      add_box(mesh, {-L / 2, -depth / 2, 0.0}, {L / 2, depth / 2, seat_h});
      add_box(mesh, {-L / 2, depth / 2 - back_t, 0.0}, {L / 2, depth / 2, H});
      if (params.has_arms) {
        add_box(mesh, {-L / 2, -depth / 2, 0.0}, {-L / 2 + arm_w, depth / 2, arm_h});
        add_box(mesh, {L / 2 - arm_w, -depth / 2, 0.0}, {L / 2, depth / 2, arm_h});
      }
      if (params.curved) {
        // L-shaped: a second leg extending in +y from the +x end.
        const double leg = 0.9;
        add_box(mesh, {L / 2 - depth, depth / 2, 0.0}, {L / 2, depth / 2 + leg, seat_h});
        add_box(mesh, {L / 2 - back_t, depth / 2, 0.0}, {L / 2, depth / 2 + leg, H});
        if (params.has_arms) {
          add_box(mesh, {L / 2 - depth, depth / 2 + leg - arm_w, 0.0},
                  {L / 2, depth / 2 + leg, arm_h});
        }
      }
      scores << score_from_range(L, lr), params.curved ? 5.0 : 1.0,
          params.has_arms ? 5.0 : 1.0, score_from_range(H, hr);
      break;
    }
    case ShapeClass::slabform: {
      const double half_w = 0.30 + 0.10 * jitter.uniform();
      const double body_top = 0.34;
      const double wheel = 0.10;
      add_box(mesh, {-L / 2, -half_w, wheel}, {L / 2, half_w, body_top});
      // Cabin; a sleek car gets a shorter cabin plus a sloped hood wedge.
      const double cabin_x0 = -L * 0.30;
      const double cabin_x1 = params.curved ? L * 0.10 : L * 0.38;
      add_box(mesh, {cabin_x0, -half_w * 0.85, body_top},
              {cabin_x1, half_w * 0.85, body_top + H});
      if (params.curved) {
        add_wedge_x(mesh, {cabin_x1, -half_w * 0.85, body_top},
                    {L * 0.46, half_w * 0.85, body_top + H}, true);
      }
      const double wx = L / 2 - 0.18;
      for (double sx : {-wx, wx}) {
        for (double sy : {-half_w + 0.05, half_w - 0.05}) {
          add_box(mesh, {sx - 0.10, sy - 0.05, 0.0}, {sx + 0.10, sy + 0.05, wheel});
        }
      }
      // Attribute order: long, sleek, tall, wide.
      const double wide_score = 1.0 + 4.0 * (half_w - 0.30) / 0.10;
      scores << score_from_range(L, lr), params.curved ? 5.0 : 1.0,
          score_from_range(H, hr), wide_score;
      break;
    }
    case ShapeClass::wingform: {
      const double span = 1.0 + 1.2 * jitter.uniform();
      const double fus_r = 0.12;
      add_box(mesh, {-L / 2, -fus_r, 0.30}, {L / 2, fus_r, 0.30 + 2 * fus_r});
      add_box(mesh, {-0.16, -span / 2, 0.38}, {0.16, span / 2, 0.46});
      // Tail fin height is the tall control.
      add_box(mesh, {-L / 2, -0.03, 0.30 + 2 * fus_r}, {-L / 2 + 0.12, 0.03, 0.30 + 2 * fus_r + H});
      add_box(mesh, {-L / 2, -span / 6, 0.40}, {-L / 2 + 0.14, span / 6, 0.47});
      // Engine pods under the wings, symmetric spread.
      for (int e = 0; e < params.segments; ++e) {
        const double frac = 0.25 + 0.18 * (e / 2);
        const double y = (e % 2 == 0 ? 1.0 : -1.0) * frac * span;
        add_box(mesh, {-0.10, y - 0.05, 0.30}, {0.14, y + 0.05, 0.38});
      }
      const double wide_score = 1.0 + 4.0 * (span - 1.0) / 1.2;
      const double engine_score = 1.0 + params.segments;
      scores << score_from_range(L, lr), wide_score, engine_score, score_from_range(H, hr);
      break;
    }
  }
  scores = scores.cwiseMax(1.0).cwiseMin(5.0);
  return {std::move(mesh), std::move(scores)};
}

std::string generate_description(const Eigen::VectorXd& scores, ShapeClass cls,
                                 std::uint64_t seed) {
  const auto& phrases = attribute_phrases(cls);
  if (scores.size() != static_cast<Eigen::Index>(phrases.size())) {
    throw std::invalid_argument("generate_description: score count does not match class attributes");
  }
  Rng rng(seed);
  std::vector<std::string> adjectives;
  std::vector<std::string> preps;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const auto& ph = phrases[static_cast<std::size_t>(i)];
    if (scores[i] >= 4.0) {
      (ph.prepositional ? preps : adjectives).push_back(ph.positive);
    } else if (scores[i] <= 2.0) {
      (ph.prepositional ? preps : adjectives).push_back(ph.negative);
    }
  }
  // Word order carries no signal (bag-of-words downstream); shuffle it.
  for (std::size_t i = adjectives.size(); i > 1; --i) {
    std::swap(adjectives[i - 1], adjectives[rng.uniform_int(i)]);
  }

  const std::string noun = class_noun(cls);
  std::string adj_list;
  for (std::size_t i = 0; i < adjectives.size(); ++i) {
    if (i > 0) adj_list += i + 1 == adjectives.size() ? " and " : " ";
    adj_list += adjectives[i];
  }
  std::string prep_list;
  for (std::size_t i = 0; i < preps.size(); ++i) {
    if (i > 0) prep_list += " and ";
    prep_list += preps[i];
  }

  std::string text;
  switch (rng.uniform_int(3)) {
    case 0:
      text = "a " + (adj_list.empty() ? "" : adj_list + " ") + noun +
             (prep_list.empty() ? "" : " " + prep_list);
      break;
    case 1:
      text = "the " + noun + (adj_list.empty() ? "" : " is " + adj_list) +
             (prep_list.empty() ? "" : (adj_list.empty() ? " comes " : " and comes ") + prep_list);
      break;
    default:
      text = "this is a " + (adj_list.empty() ? "" : adj_list + " ") + noun +
             (prep_list.empty() ? "" : " " + prep_list);
      break;
  }
  return text;
}

std::string Manifest::mesh_file(const AnnotatedObject& obj) const {
  if (obj.mesh_path.empty()) return obj.mesh_path;
  if (fs::path(obj.mesh_path).is_absolute() || base_dir.empty()) return obj.mesh_path;
  return (fs::path(base_dir) / obj.mesh_path).string();
}

Manifest build_corpus(int n_objects, ShapeClass cls, int descriptions_per_object,
                      std::uint64_t seed, const std::string& out_dir) {
  if (n_objects < 2) throw std::invalid_argument("build_corpus: need at least 2 objects");
  if (descriptions_per_object < 1) {
    throw std::invalid_argument("build_corpus: need at least 1 description per object");
  }
  fs::create_directories(fs::path(out_dir) / "meshes");

  Manifest manifest;
  manifest.base_dir = out_dir;
  manifest.class_name = shape_class_name(cls);
  manifest.attribute_names = attribute_names(cls);

  std::set<std::string> vocabulary;
  for (int i = 0; i < n_objects; ++i) {
    Rng obj_rng(derive_seed(seed, 0x0B, static_cast<std::uint64_t>(i)));
    const ShapeParams params = ShapeParams::sample(cls, obj_rng);
    auto [mesh, scores] = generate_shape(params);

    AnnotatedObject obj;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "obj_%03d", i);
    obj.id = idbuf;
    obj.mesh_path = std::string("meshes/") + idbuf + ".obj";
    obj.scores = scores;
    for (int d = 0; d < descriptions_per_object; ++d) {
      obj.descriptions.push_back(generate_description(
          scores, cls, derive_seed(seed, 0xDE5C, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(d))));
      for (const auto& tok : tokenize(obj.descriptions.back())) vocabulary.insert(tok);
    }
    save_obj(mesh, manifest.mesh_file(obj));
    manifest.objects.push_back(std::move(obj));
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.tsv").string());
  const WordTable table =
      make_hashed_word_table(std::vector<std::string>(vocabulary.begin(), vocabulary.end()));
  save_word_vectors(table, (fs::path(out_dir) / "word_vectors.txt").string());
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "class\t" << manifest.class_name << '\n';
  out << "attributes";
  for (const auto& name : manifest.attribute_names) out << '\t' << name;
  out << '\n';
  char buf[64];
  for (const auto& obj : manifest.objects) {
    out << obj.id << '\t' << obj.mesh_path;
    for (Eigen::Index i = 0; i < obj.scores.size(); ++i) {
      std::snprintf(buf, sizeof buf, "\t%.6g", obj.scores[i]);
      out << buf;
    }
    for (const auto& d : obj.descriptions) out << '\t' << d;
    out << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open manifest");

  auto split_tabs = [](const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    return fields;
  };

  Manifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();

  std::string line;
  int line_no = 0;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields[0] == "class") {
      if (fields.size() != 2) throw std::runtime_error(path + ":1: malformed class line");
      manifest.class_name = fields[1];
      continue;
    }
    if (fields[0] == "attributes") {
      manifest.attribute_names.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (manifest.attribute_names.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": object record before attributes header");
    }
    const std::size_t a = manifest.attribute_names.size();
    if (fields.size() < 2 + a + 1) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": record too short (want id, mesh, " + std::to_string(a) +
                               " scores, descriptions)");
    }
    AnnotatedObject obj;
    obj.id = fields[0];
    if (!seen_ids.insert(obj.id).second) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate id '" +
                               obj.id + "'");
    }
    obj.mesh_path = fields[1];
    obj.scores.resize(static_cast<Eigen::Index>(a));
    for (std::size_t i = 0; i < a; ++i) {
      try {
        obj.scores[static_cast<Eigen::Index>(i)] = std::stod(fields[2 + i]);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad score '" +
                                 fields[2 + i] + "'");
      }
      const double s = obj.scores[static_cast<Eigen::Index>(i)];
      if (s < 1.0 || s > 5.0) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": score " +
                                 fields[2 + i] + " outside [1,5]");
      }
    }
    obj.descriptions.assign(fields.begin() + 2 + static_cast<long>(a), fields.end());
    if (!fs::exists(manifest.mesh_file(obj))) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing mesh file '" +
                               manifest.mesh_file(obj) + "'");
    }
    manifest.objects.push_back(std::move(obj));
  }
  if (manifest.objects.empty()) throw std::runtime_error(path + ": no object records");
  return manifest;
}

}  // namespace beo
