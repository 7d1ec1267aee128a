#include "beo/shape2vec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "beo/detail/binio.hpp"
#include "beo/rng.hpp"

namespace beo {

namespace {

Eigen::VectorXd image_as_input(const DepthImage& img) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(img.values.size()));
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = static_cast<double>(img.values[i]);
  }
  return x;
}

}  // namespace

std::vector<RenderPair> make_training_set(const std::vector<VoxelGrid>& objects,
                                          const SubspaceModel& model, int renders_per_object,
                                          const ViewRegime& regime, std::uint64_t seed,
                                          int image_width, int image_height) {
  if (renders_per_object < 1) {
    throw std::invalid_argument("make_training_set: renders_per_object must be >= 1");
  }
  std::vector<RenderPair> pairs;
  pairs.reserve(objects.size() * static_cast<std::size_t>(renders_per_object));
  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    const VoxelGrid& grid = objects[oi];
    const ShapeEmbedding target = project(model, flatten(grid));
    for (int r = 0; r < renders_per_object; ++r) {
      Camera cam = sample_viewpoint(regime, derive_seed(seed, oi, static_cast<std::uint64_t>(r)));
      cam.width = image_width;
      cam.height = image_height;
      RenderPair p;
      p.image = render_depth(grid, cam);
      p.target = target;
      p.object_index = static_cast<int>(oi);
      p.camera = cam;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

RegressorTrainResult train_regressor(const std::vector<RenderPair>& pairs,
                                     const RegressorConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("train_regressor: no training pairs");
  const int w = pairs.front().image.width;
  const int h = pairs.front().image.height;
  const Eigen::Index k = pairs.front().target.size();
  for (const RenderPair& p : pairs) {
    if (p.image.width != w || p.image.height != h) {
      throw std::invalid_argument("train_regressor: inconsistent image sizes");
    }
    if (p.target.size() != k) {
      throw std::invalid_argument("train_regressor: inconsistent embedding dimensions");
    }
  }

  // Scalar RMS standardization of the targets; folded back into the linear
  // output layer after training so embed_depth reports subspace units.
  double sq = 0.0;
  for (const RenderPair& p : pairs) sq += p.target.squaredNorm();
  const double scale = std::max(std::sqrt(sq / (static_cast<double>(pairs.size()) * k)), 1e-12);

  std::vector<Eigen::VectorXd> inputs(pairs.size());
  std::vector<Eigen::VectorXd> targets(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    inputs[i] = image_as_input(pairs[i].image);
    targets[i] = pairs[i].target / scale;
  }

  NetworkSpec spec;
  spec.input_dim = w * h;
  for (int dim : cfg.hidden) spec.layers.push_back({dim, Activation::relu});
  spec.layers.push_back({static_cast<int>(k), Activation::linear});
  spec.seed = cfg.seed;
  Network net = init_network(spec);
  AdamState adam = make_adam_state(net, cfg.lr);

  RegressorTrainResult result;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x51u));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Gradients acc = Gradients::zeros_like(net);
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t si = order[bi];
        ForwardTrace trace = forward(net, inputs[si]);
        epoch_loss += mse_loss(trace.output(), targets[si]);
        Gradients g = backward(net, trace, mse_loss_grad(trace.output(), targets[si]));
        acc.accumulate(g);
      }
      acc.scale(1.0 / static_cast<double>(end - start));
      adam_step(net, acc, adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    result.epoch_losses.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) {
      result.diverged = true;
      break;
    }
  }

  // Fold the target scale into the output layer.
  net.layers.back().weights *= scale;
  net.layers.back().biases *= scale;

  result.model.net = std::move(net);
  result.model.image_width = w;
  result.model.image_height = h;
  result.model.k = static_cast<int>(k);
  result.final_loss = result.epoch_losses.empty()
                          ? 0.0
                          : result.epoch_losses.back() * scale * scale;
  return result;
}

ShapeEmbedding embed_depth(const RegressorModel& model, const DepthImage& img) {
  if (img.width != model.image_width || img.height != model.image_height) {
    throw std::invalid_argument("embed_depth: image size " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " does not match model " +
                                std::to_string(model.image_width) + "x" +
                                std::to_string(model.image_height));
  }
  return forward(model.net, image_as_input(img)).output();
}

void save_regressor(const RegressorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_magic(out, "S2VC");
  detail::write_u32le(out, static_cast<std::uint32_t>(model.image_height));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.image_width));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.k));
  write_network(out, model.net);
  if (!out) throw std::runtime_error(path + ": write failed");
}

RegressorModel load_regressor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open regressor file");
  detail::expect_magic(in, "S2VC", path);
  RegressorModel model;
  model.image_height = static_cast<int>(detail::read_u32le(in, "H"));
  model.image_width = static_cast<int>(detail::read_u32le(in, "W"));
  model.k = static_cast<int>(detail::read_u32le(in, "k"));
  model.net = read_network(in, path);
  return model;
}

}  // namespace beo
