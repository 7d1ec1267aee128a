#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "beo/langground.hpp"
#include "beo/render.hpp"
#include "beo/shape2vec.hpp"
#include "beo/subspace.hpp"
#include "beo/synthgen.hpp"

namespace beo {

struct Splits {
  std::vector<std::string> train, dev, test;
};

/// Object-level split, deterministic per seed; proportions land within one
/// object of the requested ratios. Ratios must sum to 1.
Splits split_dataset(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed);

/// Presence bit per attribute: 1 iff mean score > 3.0 (an exact 3.0 is 0).
AttributeVector binarize_attributes(const Eigen::VectorXd& mean_scores);

/// Candidate indices sorted by similarity descending, ties broken toward the
/// lower index.
std::vector<int> rank_by_similarity(const std::vector<double>& sims);

struct RetrievalTrial {
  std::vector<ShapeEmbedding> candidates;  // distinct objects
  std::string description;
  int true_index = 0;
};

/// Ranks the trial's candidates by joint similarity to the description.
std::vector<int> run_trial(const JointModel& model, const RetrievalTrial& trial,
                           const WordTable& words);

enum class EmbeddingSource { eq1_projection, regressor };

/// One of the paper-style experimental conditions. full_view embeds the
/// ground-truth grid directly; the other two embed rendered depth images.
struct Condition {
  std::string name;
  ViewRegime train_regime;  // viewpoints of the language training images
  ViewRegime eval_regime;   // viewpoints of the evaluation images
  EmbeddingSource source = EmbeddingSource::regressor;

  static Condition full_view();
  static Condition partial_view();
  static Condition view_transfer();
  static Condition by_name(const std::string& name);
};

/// Everything eval needs about one test object.
struct EvalObject {
  std::string id;
  VoxelGrid grid;
  Eigen::VectorXd scores;
  std::vector<std::string> descriptions;
};

struct ModelBundle {
  const SubspaceModel* subspace = nullptr;
  const RegressorModel* regressor = nullptr;  // may be null for full_view
  const JointModel* joint = nullptr;
  const WordTable* words = nullptr;
};

struct RetrievalEval {
  double top1 = 0.0;
  double top2 = 0.0;
  int trials = 0;
};

/// Three-candidate retrieval over every (description, test image,
/// distractor-pair) tuple: images_per_object evaluation images are rendered
/// per object from the condition's eval regime, and each description gets
/// images_per_object independently seeded trials. Distractor draws and
/// candidate order depend only on (seed, object, description, repeat), so
/// conditions share trials. With shuffle_labels the description of each trial
/// is replaced by a uniform draw from the whole test pool (chance baseline).
RetrievalEval eval_retrieval(const ModelBundle& models, const Condition& condition,
                             const std::vector<EvalObject>& test_objects, int images_per_object,
                             std::uint64_t seed, bool shuffle_labels = false);

/// Per-attribute F1 of the shape-side head at threshold 0.5 against binarized
/// ground truth, over every (object, evaluation image) pair. A never-positive,
/// never-predicted attribute scores 1.
std::vector<double> eval_attributes(const ModelBundle& models, const Condition& condition,
                                    const std::vector<EvalObject>& test_objects,
                                    int images_per_object, std::uint64_t seed);

}  // namespace beo
