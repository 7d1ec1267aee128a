#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "beo/mesh.hpp"
#include "beo/rng.hpp"

namespace beo {

/// Parametric object families standing in for couch / car / plane classes.
enum class ShapeClass { boxform, slabform, wingform };
ShapeClass shape_class_from_name(const std::string& name);
std::string shape_class_name(ShapeClass cls);

/// Generative controls. Attribute ground truth is a deterministic function of
/// these; `seed` only jitters non-attribute dimensions (e.g. seat depth).
struct ShapeParams {
  ShapeClass cls = ShapeClass::boxform;
  double length = 1.5;   // x extent, drives the long/short score
  double height = 0.8;   // back / cabin / tail height, drives tall/low
  bool has_arms = true;  // boxform arm boxes
  bool curved = false;   // boxform bend, slabform wedge nose
  int segments = 2;      // wingform engine pods (0..4)
  std::uint64_t seed = 0;

  /// Documented control ranges per class.
  static std::pair<double, double> length_range(ShapeClass cls);
  static std::pair<double, double> height_range(ShapeClass cls);

  /// Draws controls with extreme-biased extents so most attribute scores land
  /// in [1,2] or [4,5], mirroring how raters describe distinctive objects.
  static ShapeParams sample(ShapeClass cls, Rng& rng);
};

/// Per-class attribute vocabulary. `positive`/`negative` are the phrases the
/// description generator uses for extreme scores; prepositional phrases go
/// after the noun.
struct AttributePhrase {
  std::string name;
  std::string positive;
  std::string negative;
  bool prepositional = false;
};
const std::vector<AttributePhrase>& attribute_phrases(ShapeClass cls);
std::vector<std::string> attribute_names(ShapeClass cls);

/// Deterministic parametric mesh plus its ground-truth 1-5 attribute scores.
std::pair<TriMesh, Eigen::VectorXd> generate_shape(const ShapeParams& params);

/// Fills a seeded sentence template with phrases for every attribute whose
/// score is extreme (<= 2 or >= 4); mid-scale attributes are omitted.
std::string generate_description(const Eigen::VectorXd& scores, ShapeClass cls,
                                 std::uint64_t seed);

struct AnnotatedObject {
  std::string id;
  std::string mesh_path;  // relative to the manifest's base_dir
  Eigen::VectorXd scores; // A reals in [1,5] (mean-of-raters style)
  std::vector<std::string> descriptions;
};

/// Line-delimited corpus manifest. File layout (tab-separated):
///   class <TAB> <class-name>
///   attributes <TAB> name1 <TAB> ... <TAB> nameA
///   <id> <TAB> <mesh path> <TAB> score1..scoreA <TAB> description1...
struct Manifest {
  std::string base_dir;
  std::string class_name;
  std::vector<std::string> attribute_names;
  std::vector<AnnotatedObject> objects;

  std::string mesh_file(const AnnotatedObject& obj) const;
  int num_attributes() const { return static_cast<int>(attribute_names.size()); }
};

/// Generates n_objects meshes + descriptions under out_dir (meshes/,
/// manifest.tsv, word_vectors.txt with deterministic hashed vectors covering
/// the corpus vocabulary). Byte-reproducible per seed.
Manifest build_corpus(int n_objects, ShapeClass cls, int descriptions_per_object,
                      std::uint64_t seed, const std::string& out_dir);

void save_manifest(const Manifest& manifest, const std::string& path);

/// Loads and validates a manifest: unique ids, scores within [1,5], at least
/// one description per object, mesh files present.
Manifest load_manifest(const std::string& path);

}  // namespace beo
