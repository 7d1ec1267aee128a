#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "beo/evalhar.hpp"

namespace beo {

// Process exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitMissingPrereq = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitUsage = 64;

/// Every knob of the pipeline. Desk-scale defaults; the paper-scale values
/// (64^3 voxels, 300-dim subspace, 600 renders per mesh) are configuration.
struct PipelineConfig {
  std::string corpus_dir = "corpus";
  std::string models_dir = "models";
  std::string results_dir = "results";
  std::string word_vectors;  // empty -> <corpus_dir>/word_vectors.txt

  std::string object_class = "boxform";
  int n_objects = 50;
  int descriptions_per_object = 10;

  int resolution = 16;  // voxel grid R
  int k_max = 24;       // VBPCA column budget
  int vb_max_iters = 300;
  double vb_tol = 1e-7;

  int image_size = 32;  // rendered depth images are square
  int renders_per_object = 30;
  int regressor_epochs = 80;
  int regressor_batch = 32;
  double regressor_lr = 1e-3;

  int joint_images_per_object = 5;  // annotated images per training object
  double lr = 1e-4;                 // joint model Adam rate
  int batch = 32;
  double lambda_attr = 1.0;
  int patience = 5;
  int max_epochs = 300;

  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  int images_per_object_eval = 10;

  std::string condition = "all";  // train/eval condition selection
  std::uint64_t seed = 42;

  std::string word_vectors_path() const;
  std::string manifest_path() const;
  std::string subspace_path() const;
  std::string regressor_path() const;
  std::string joint_path(const std::string& condition_name) const;
  std::string splits_path() const;

  /// Sorted key=value dump; hashed into every output file for provenance.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Split sidecar written at training time and reused by eval so the test
/// split can never leak into training.
void save_splits(const std::string& path, const Splits& splits, std::uint64_t seed,
                 std::uint64_t config_hash);
Splits load_splits(const std::string& path);

/// Voxelizes the manifest objects with the given ids, in id order.
std::vector<EvalObject> collect_objects(const Manifest& manifest,
                                        const std::vector<std::string>& ids, int resolution);

struct EvalReport {
  std::string condition;
  std::string class_name;
  RetrievalEval retrieval;
  RetrievalEval shuffled;  // label-shuffled baseline over the same trials
  std::vector<std::string> attribute_names;
  std::vector<double> f1;
  double macro_f1 = 0.0;
};

/// Full evaluation of one condition from the on-disk models; throws on
/// missing artifacts.
EvalReport run_condition_eval(const PipelineConfig& cfg, const Condition& condition);

// Subcommand entry points; these print human-readable progress to stdout and
// map failures onto the exit codes above.
int cmd_gen_corpus(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg, const std::string& stage);
int cmd_eval(const PipelineConfig& cfg, const std::string& condition_name);
int cmd_query(const PipelineConfig& cfg, const std::vector<std::string>& image_paths,
              const std::string& description);
int cmd_complete(const PipelineConfig& cfg, const std::string& image_path,
                 const std::string& output_path);
int cmd_gradcheck(const PipelineConfig& cfg);

}  // namespace beo
