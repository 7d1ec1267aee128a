#include "beo/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "beo/detail/binio.hpp"
#include "beo/rng.hpp"

namespace beo {

namespace {

constexpr double kBceEps = 1e-7;

double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::linear:
      return z;
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::sigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return z;
}

// Derivative in terms of pre-activation z and activation value a.
double act_deriv(Activation act, double z, double a) {
  switch (act) {
    case Activation::linear:
      return 1.0;
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;  // subgradient at 0 defined as 0
    case Activation::sigmoid:
      return a * (1.0 - a);
  }
  return 1.0;
}

void check_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* who) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) {
    n += static_cast<std::size_t>(l.weights.size()) + static_cast<std::size_t>(l.biases.size());
  }
  return n;
}

Network init_network(const NetworkSpec& spec) {
  if (spec.input_dim < 1) throw std::invalid_argument("init_network: input dim must be >= 1");
  if (spec.layers.empty()) throw std::invalid_argument("init_network: no layers");
  Network net;
  net.input_dim = spec.input_dim;
  Rng rng(spec.seed);
  int fan_in = spec.input_dim;
  for (const LayerSpec& ls : spec.layers) {
    if (ls.dim < 1) throw std::invalid_argument("init_network: layer dim must be >= 1");
    Layer layer;
    layer.act = ls.act;
    layer.weights.resize(ls.dim, fan_in);
    const double limit = std::sqrt(6.0 / fan_in);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-limit, limit);
      }
    }
    layer.biases = Eigen::VectorXd::Zero(ls.dim);
    net.layers.push_back(std::move(layer));
    fan_in = ls.dim;
  }
  return net;
}

ForwardTrace forward(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim) {
    throw std::invalid_argument("forward: input size " + std::to_string(x.size()) +
                                " does not match network input dim " +
                                std::to_string(net.input_dim));
  }
  ForwardTrace trace;
  trace.activations.reserve(net.layers.size() + 1);
  trace.preacts.reserve(net.layers.size());
  trace.activations.push_back(x);
  for (const Layer& l : net.layers) {
    Eigen::VectorXd z = l.weights * trace.activations.back() + l.biases;
    Eigen::VectorXd a(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) a[i] = apply_act(l.act, z[i]);
    trace.preacts.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  g.dweights.reserve(net.layers.size());
  g.dbiases.reserve(net.layers.size());
  for (const Layer& l : net.layers) {
    g.dweights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.dbiases.push_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  g.dinput = Eigen::VectorXd::Zero(net.input_dim);
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t i = 0; i < dweights.size(); ++i) {
    dweights[i] += other.dweights[i];
    dbiases[i] += other.dbiases[i];
  }
  if (dinput.size() == other.dinput.size()) dinput += other.dinput;
}

void Gradients::scale(double s) {
  for (auto& m : dweights) m *= s;
  for (auto& b : dbiases) b *= s;
  dinput *= s;
}

Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Eigen::VectorXd& grad_output,
                   const std::vector<Eigen::VectorXd>* extra_activation_grads) {
  const std::size_t nl = net.layers.size();
  if (trace.activations.size() != nl + 1) {
    throw std::invalid_argument("backward: trace does not match network");
  }
  if (grad_output.size() != trace.activations.back().size()) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }
  if (extra_activation_grads && extra_activation_grads->size() != trace.activations.size()) {
    throw std::invalid_argument("backward: extra gradient list shape mismatch");
  }

  Gradients g;
  g.dweights.resize(nl);
  g.dbiases.resize(nl);

  Eigen::VectorXd grad_act = grad_output;
  if (extra_activation_grads && (*extra_activation_grads)[nl].size() > 0) {
    grad_act += (*extra_activation_grads)[nl];
  }
  for (std::size_t li = nl; li-- > 0;) {
    const Layer& l = net.layers[li];
    const Eigen::VectorXd& z = trace.preacts[li];
    const Eigen::VectorXd& a = trace.activations[li + 1];
    Eigen::VectorXd delta(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      delta[i] = grad_act[i] * act_deriv(l.act, z[i], a[i]);
    }
    g.dweights[li] = delta * trace.activations[li].transpose();
    g.dbiases[li] = delta;
    grad_act = l.weights.transpose() * delta;
    if (extra_activation_grads && (*extra_activation_grads)[li].size() > 0) {
      grad_act += (*extra_activation_grads)[li];
    }
  }
  g.dinput = std::move(grad_act);
  return g;
}

double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_same_size(x, y, "cosine_similarity");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  }
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

double cosine_similarity_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  check_same_size(x, y, "cosine_similarity");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  }
  const double dot = x.dot(y);
  const double sim = dot / (nx * ny);
  dx = y / (nx * ny) - (sim / (nx * nx)) * x;
  dy = x / (nx * ny) - (sim / (ny * ny)) * y;
  return std::clamp(sim, -1.0, 1.0);
}

double cosine_embedding_loss(double sim, int label, double margin) {
  if (label == 1) return 1.0 - sim;
  if (label == -1) return std::max(0.0, sim - margin);
  throw std::invalid_argument("cosine_embedding_loss: label must be +1 or -1");
}

double cosine_embedding_loss_dsim(double sim, int label, double margin) {
  if (label == 1) return -1.0;
  if (label == -1) return sim > margin ? 1.0 : 0.0;
  throw std::invalid_argument("cosine_embedding_loss: label must be +1 or -1");
}

double bce_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  check_same_size(pred, target, "bce_loss");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kBceEps, 1.0 - kBceEps);
    sum += -(target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(pred.size());
}

Eigen::VectorXd bce_loss_grad(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  check_same_size(pred, target, "bce_loss");
  Eigen::VectorXd g(pred.size());
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (pred[i] < kBceEps || pred[i] > 1.0 - kBceEps) {
      g[i] = 0.0;  // clamp active: flat
    } else {
      g[i] = inv_n * (-target[i] / pred[i] + (1.0 - target[i]) / (1.0 - pred[i]));
    }
  }
  return g;
}

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  check_same_size(pred, target, "mse_loss");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Eigen::VectorXd mse_loss_grad(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  check_same_size(pred, target, "mse_loss");
  return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

AdamState make_adam_state(const Network& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (const Layer& l : net.layers) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(l.biases.size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.dweights.size() != net.layers.size() || state.m_w.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: gradient/state shape mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m.array() = state.beta1 * m.array() + (1.0 - state.beta1) * g.array();
      v.array() = state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square();
      param.array() -= state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    };
    if (grads.dweights[i].rows() != net.layers[i].weights.rows() ||
        grads.dweights[i].cols() != net.layers[i].weights.cols()) {
      throw std::invalid_argument("adam_step: weight gradient shape mismatch");
    }
    update(net.layers[i].weights, state.m_w[i], state.v_w[i], grads.dweights[i]);
    update(net.layers[i].biases, state.m_b[i], state.v_b[i], grads.dbiases[i]);
  }
}

double LossProbe::loss(const Eigen::VectorXd& out) const {
  switch (kind) {
    case Kind::mse:
      return mse_loss(out, target);
    case Kind::bce:
      return bce_loss(out, target);
    case Kind::cosine_embedding:
      return cosine_embedding_loss(cosine_similarity(out, target), label, margin);
  }
  return 0.0;
}

Eigen::VectorXd LossProbe::grad(const Eigen::VectorXd& out) const {
  switch (kind) {
    case Kind::mse:
      return mse_loss_grad(out, target);
    case Kind::bce:
      return bce_loss_grad(out, target);
    case Kind::cosine_embedding: {
      Eigen::VectorXd dx, dy;
      const double sim = cosine_similarity_grad(out, target, dx, dy);
      return cosine_embedding_loss_dsim(sim, label, margin) * dx;
    }
  }
  return Eigen::VectorXd::Zero(out.size());
}

double gradient_check(Network& net, const Eigen::VectorXd& input, const LossProbe& probe,
                      double h, std::size_t max_params, std::uint64_t seed) {
  const ForwardTrace trace = forward(net, input);
  const Gradients analytic = backward(net, trace, probe.grad(trace.output()));

  // Flat indexing over (layer, weight entries..., bias entries...).
  struct ParamRef {
    std::size_t layer;
    bool is_bias;
    Eigen::Index idx;
  };
  std::vector<ParamRef> refs;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    for (Eigen::Index i = 0; i < net.layers[li].weights.size(); ++i) {
      refs.push_back({li, false, i});
    }
    for (Eigen::Index i = 0; i < net.layers[li].biases.size(); ++i) {
      refs.push_back({li, true, i});
    }
  }
  if (refs.size() > max_params) {
    // Seeded subsample without replacement (partial Fisher-Yates).
    Rng rng(seed);
    for (std::size_t i = 0; i < max_params; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(refs.size() - i));
      std::swap(refs[i], refs[j]);
    }
    refs.resize(max_params);
  }

  double max_rel = 0.0;
  for (const ParamRef& r : refs) {
    double* p = r.is_bias ? &net.layers[r.layer].biases[r.idx]
                          : net.layers[r.layer].weights.data() + r.idx;
    const double saved = *p;
    *p = saved + h;
    const double lp = probe.loss(forward(net, input).output());
    *p = saved - h;
    const double lm = probe.loss(forward(net, input).output());
    *p = saved;

    const double numeric = (lp - lm) / (2.0 * h);
    const double exact = r.is_bias ? analytic.dbiases[r.layer][r.idx]
                                   : *(analytic.dweights[r.layer].data() + r.idx);
    const double denom = std::max(std::abs(numeric), std::abs(exact));
    if (denom < 1e-10) continue;  // both effectively zero
    max_rel = std::max(max_rel, std::abs(numeric - exact) / std::max(denom, 1e-4));
  }
  return max_rel;
}

void write_network(std::ostream& os, const Network& net) {
  detail::write_magic(os, "NNET");
  detail::write_u32le(os, static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    detail::write_u32le(os, static_cast<std::uint32_t>(l.weights.cols()));
    detail::write_u32le(os, static_cast<std::uint32_t>(l.weights.rows()));
    detail::write_u8(os, static_cast<std::uint8_t>(l.act));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        detail::write_f64le(os, l.weights(r, c));
      }
    }
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) detail::write_f64le(os, l.biases[i]);
  }
}

Network read_network(std::istream& is, const std::string& context) {
  detail::expect_magic(is, "NNET", context);
  const std::uint32_t n_layers = detail::read_u32le(is, "layer count");
  if (n_layers == 0 || n_layers > 1024) throw std::runtime_error(context + ": implausible layer count");
  Network net;
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const std::uint32_t in = detail::read_u32le(is, "in dim");
    const std::uint32_t out = detail::read_u32le(is, "out dim");
    const std::uint8_t act = detail::read_u8(is, "activation");
    if (act > 2) throw std::runtime_error(context + ": unknown activation code");
    Layer l;
    l.act = static_cast<Activation>(act);
    l.weights.resize(out, in);
    for (std::uint32_t r = 0; r < out; ++r) {
      for (std::uint32_t c = 0; c < in; ++c) {
        l.weights(r, c) = detail::read_f64le(is, "weight");
      }
    }
    l.biases.resize(out);
    for (std::uint32_t i = 0; i < out; ++i) l.biases[i] = detail::read_f64le(is, "bias");
    if (li == 0) net.input_dim = static_cast<int>(in);
    net.layers.push_back(std::move(l));
  }
  return net;
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_network(out, net);
  if (!out) throw std::runtime_error(path + ": write failed");
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open network file");
  return read_network(in, path);
}

}  // namespace beo
