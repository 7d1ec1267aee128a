#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "beo/nnet.hpp"
#include "beo/subspace.hpp"

namespace beo {

/// Pretrained word vectors, loaded from the usual text distribution format
/// (token then D space-separated reals per line).
struct WordTable {
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  int dim = 0;
  int duplicates_overwritten = 0;  // later lines win; count kept for logging
};

WordTable load_word_vectors(const std::string& path);
void save_word_vectors(const WordTable& table, const std::string& path);

/// Deterministic stand-in table: each token gets a unit vector seeded by its
/// bytes. Lets desk-scale corpora train without an external download.
WordTable make_hashed_word_table(const std::vector<std::string>& vocabulary, int dim = 16);

/// Bag-of-words sentence embedding: mean vector of in-vocabulary tokens after
/// lowercasing, punctuation stripping and whitespace tokenization.
struct SentenceEmbedding {
  Eigen::VectorXd values;
  double oov_fraction = 0.0;  // share of tokens missing from the table
};

std::vector<std::string> tokenize(const std::string& text);
SentenceEmbedding embed_sentence(const WordTable& table, const std::string& text);

/// Predicted or target attribute bits; predictions in [0,1], targets binary.
using AttributeVector = Eigen::VectorXd;

/// Two-branch joint embedding model: each modality runs through a 256-unit
/// relu layer, is reduced to a shared 64-dim space for the cosine objective,
/// and exposes a sigmoid attribute head fed by its 256-dim hidden layer.
struct JointModel {
  Network shape_branch;  // k -> 256 relu -> 64 linear
  Network lang_branch;   // D -> 256 relu -> 64 linear
  Network shape_head;    // 256 -> A sigmoid
  Network lang_head;     // 256 -> A sigmoid
  int k = 0;
  int word_dim = 0;
  int num_attributes = 0;
};

JointModel init_joint_model(int k, int word_dim, int num_attributes, std::uint64_t seed,
                            int hidden = 256, int embed = 64);

/// A shape/description pair with attribute supervision and a correspondence
/// label (+1 matching, -1 mismatched).
struct GroundingExample {
  ShapeEmbedding shape;
  std::string description;
  AttributeVector attributes;  // binarized targets of the *shape's* object
  int label = 1;
  int object_id = -1;
};

/// Matching shape/description example used to build training pairs.
struct PositiveExample {
  int object_id = -1;
  ShapeEmbedding shape;
  std::string description;
  AttributeVector attributes;
};

/// One negative per positive (neg_ratio 1.0): negatives re-pair a shape with
/// a description drawn from a different object. Deterministic per seed.
std::vector<GroundingExample> make_pairs(const std::vector<PositiveExample>& positives,
                                         double neg_ratio, std::uint64_t seed);

struct JointTrainConfig {
  double lr = 1e-4;
  int batch = 32;
  double lambda_attr = 1.0;  // weight of the attribute BCE terms
  int patience = 5;          // dev evaluations without improvement before stopping
  int max_epochs = 300;
  double margin = 0.0;
  std::uint64_t seed = 0;
  int hidden = 256;
  int embed = 64;
};

struct JointTrainResult {
  JointModel model;  // best-dev snapshot
  bool diverged = false;
  int best_epoch = -1;
  double best_dev_top1 = 0.0;
  std::vector<double> epoch_losses;
  std::vector<double> dev_top1_history;
};

/// Minimizes cosine-embedding loss plus lambda_attr * (BCE_shape + BCE_lang);
/// the attribute terms apply on positive pairs only. Early stopping tracks
/// top-1 retrieval on dev triplets built from `dev_positives`.
JointTrainResult train_joint(const std::vector<GroundingExample>& pairs,
                             const JointTrainConfig& cfg,
                             const std::vector<PositiveExample>& dev_positives,
                             const WordTable& words);

/// Cosine similarity of the two 64-dim branch outputs, in [-1,1]. Throws a
/// degenerate-model error if either branch output has zero norm.
double joint_similarity(const JointModel& model, const ShapeEmbedding& shape,
                        const SentenceEmbedding& sentence);

AttributeVector predict_attributes_from_shape(const JointModel& model,
                                              const ShapeEmbedding& shape);
AttributeVector predict_attributes_from_language(const JointModel& model,
                                                 const SentenceEmbedding& sentence);

/// Joint model file: magic "JNTM", u32 k, u32 D, u32 A, then four network
/// blocks in fixed order (shape branch, language branch, shape head,
/// language head).
void save_joint_model(const JointModel& model, const std::string& path);
JointModel load_joint_model(const std::string& path);

}  // namespace beo
