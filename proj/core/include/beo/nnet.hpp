#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace beo {

enum class Activation : std::uint8_t { linear = 0, relu = 1, sigmoid = 2 };

struct LayerSpec {
  int dim;
  Activation act;
};

struct NetworkSpec {
  int input_dim = 0;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation act = Activation::linear;
};

struct Network {
  int input_dim = 0;
  std::vector<Layer> layers;

  int output_dim() const { return layers.empty() ? input_dim : static_cast<int>(layers.back().weights.rows()); }
  std::size_t parameter_count() const;
};

/// Scaled-uniform fan-in initialization (limit sqrt(6/fan_in)), zero biases,
/// deterministic per spec.seed.
Network init_network(const NetworkSpec& spec);

/// All intermediate state needed for an exact reverse pass.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> activations;  // [0] = input, [i] = output of layer i
  std::vector<Eigen::VectorXd> preacts;      // pre-activation of layer i

  const Eigen::VectorXd& output() const { return activations.back(); }
};
ForwardTrace forward(const Network& net, const Eigen::VectorXd& x);

struct Gradients {
  std::vector<Eigen::MatrixXd> dweights;
  std::vector<Eigen::VectorXd> dbiases;
  Eigen::VectorXd dinput;

  static Gradients zeros_like(const Network& net);
  void accumulate(const Gradients& other);
  void scale(double s);
};

/// Reverse-mode gradients for a scalar loss with upstream gradient
/// `grad_output` at the network output. `extra_activation_grads`, when given,
/// must have activations.size() entries; non-empty entries are added to the
/// gradient of the corresponding activation on the way down (used when a side
/// head consumes a hidden layer). The relu subgradient at exactly 0 is 0.
Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Eigen::VectorXd& grad_output,
                   const std::vector<Eigen::VectorXd>* extra_activation_grads = nullptr);

// --- Losses -----------------------------------------------------------------

/// Eq-style cosine similarity x.y / (|x||y|), in [-1, 1]. Throws on zero-norm
/// input or dimension mismatch.
double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Cosine similarity plus its gradients with respect to both inputs.
double cosine_similarity_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              Eigen::VectorXd& dx, Eigen::VectorXd& dy);

/// Hinged cosine embedding loss: 1 - sim for label +1, max(0, sim - margin)
/// for label -1.
double cosine_embedding_loss(double sim, int label, double margin = 0.0);
double cosine_embedding_loss_dsim(double sim, int label, double margin = 0.0);

/// Mean binary cross-entropy with predictions clamped to [eps, 1-eps],
/// eps = 1e-7. Gradient is 0 where the clamp is active.
double bce_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);
Eigen::VectorXd bce_loss_grad(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);
Eigen::VectorXd mse_loss_grad(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

// --- Optimizer ---------------------------------------------------------------

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
};
AdamState make_adam_state(const Network& net, double lr = 1e-4);

/// Standard Adam update with bias correction, applied in place.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

// --- Gradient verification ---------------------------------------------------

/// Scalar loss attached to a network output, for gradient checking.
struct LossProbe {
  enum class Kind { mse, bce, cosine_embedding } kind = Kind::mse;
  Eigen::VectorXd target;  // mse/bce target, or the reference vector for cosine
  int label = 1;
  double margin = 0.0;

  double loss(const Eigen::VectorXd& out) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& out) const;
};

/// Max relative error between backward() and central finite differences
/// (step h) over all parameters, or a seeded subsample when the network has
/// more than max_params of them.
double gradient_check(Network& net, const Eigen::VectorXd& input, const LossProbe& probe,
                      double h = 1e-5, std::size_t max_params = 10000, std::uint64_t seed = 1);

// --- Serialization ------------------------------------------------------------

/// Weights block: magic "NNET", u32 layer count, then per layer u32 in,
/// u32 out, u8 activation code, f64 weights row-major, f64 biases.
void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is, const std::string& context);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace beo
