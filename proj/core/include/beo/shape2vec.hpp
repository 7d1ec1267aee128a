#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beo/nnet.hpp"
#include "beo/render.hpp"
#include "beo/subspace.hpp"

namespace beo {

/// Depth-image -> subspace-embedding regressor. Dense network
/// flatten(H*W) -> 512 relu -> 256 relu -> k linear by default; the hidden
/// sizes are configurable so the contract survives architecture changes.
struct RegressorModel {
  Network net;
  int image_width = 0;
  int image_height = 0;
  int k = 0;
};

/// One supervised example: a rendered depth image paired with the source
/// object's subspace projection.
struct RenderPair {
  DepthImage image;
  ShapeEmbedding target;
  int object_index = -1;
  Camera camera;
};

/// Renders `renders_per_object` seeded viewpoints of every grid and pairs
/// them with the grid's projection into the subspace. Deterministic per seed.
std::vector<RenderPair> make_training_set(const std::vector<VoxelGrid>& objects,
                                          const SubspaceModel& model, int renders_per_object,
                                          const ViewRegime& regime, std::uint64_t seed,
                                          int image_width = 64, int image_height = 64);

struct RegressorConfig {
  int epochs = 60;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {512, 256};
};

struct RegressorTrainResult {
  RegressorModel model;
  double final_loss = 0.0;   // mean squared error over the last epoch
  bool diverged = false;     // NaN/inf encountered
  std::vector<double> epoch_losses;
};

/// Minimizes MSE between predicted and target embeddings with Adam. Targets
/// are standardized by a scalar RMS internally; the scale is folded back into
/// the linear output layer so predictions come out in subspace units.
RegressorTrainResult train_regressor(const std::vector<RenderPair>& pairs,
                                     const RegressorConfig& cfg);

ShapeEmbedding embed_depth(const RegressorModel& model, const DepthImage& img);

/// Regressor file: magic "S2VC", u32 H, u32 W, u32 k, then the network block.
void save_regressor(const RegressorModel& model, const std::string& path);
RegressorModel load_regressor(const std::string& path);

}  // namespace beo
