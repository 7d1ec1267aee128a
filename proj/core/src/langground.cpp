#include "beo/langground.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "beo/detail/binio.hpp"
#include "beo/rng.hpp"

namespace beo {

namespace {

constexpr double kDegenerateNorm = 1e-12;

// Similarity that reports degeneracy instead of throwing; used inside
// training/dev-eval loops where an early model can still be collapsed.
bool try_joint_similarity(const JointModel& model, const ShapeEmbedding& shape,
                          const SentenceEmbedding& sentence, double* out) {
  const Eigen::VectorXd u = forward(model.shape_branch, shape).output();
  const Eigen::VectorXd v = forward(model.lang_branch, sentence.values).output();
  if (u.norm() < kDegenerateNorm || v.norm() < kDegenerateNorm) return false;
  *out = cosine_similarity(u, v);
  return true;
}

}  // namespace

WordTable load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open word vector file");
  WordTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (token.empty() || vals.empty() || !ls.eof()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unparsable entry");
    }
    if (table.dim == 0) {
      table.dim = static_cast<int>(vals.size());
    } else if (static_cast<int>(vals.size()) != table.dim) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": inconsistent dimension (expected " + std::to_string(table.dim) +
                               ", got " + std::to_string(vals.size()) + ")");
    }
    Eigen::VectorXd vec(table.dim);
    for (int i = 0; i < table.dim; ++i) vec[i] = vals[static_cast<std::size_t>(i)];
    if (table.vectors.count(token)) ++table.duplicates_overwritten;
    table.vectors[token] = std::move(vec);
  }
  if (table.vectors.empty()) throw std::runtime_error(path + ": empty word vector file");
  return table;
}

void save_word_vectors(const WordTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  // Sorted for reproducible bytes.
  std::vector<std::string> tokens;
  tokens.reserve(table.vectors.size());
  for (const auto& [tok, _] : table.vectors) tokens.push_back(tok);
  std::sort(tokens.begin(), tokens.end());
  char buf[64];
  for (const std::string& tok : tokens) {
    out << tok;
    const Eigen::VectorXd& v = table.vectors.at(tok);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.9g", v[i]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

WordTable make_hashed_word_table(const std::vector<std::string>& vocabulary, int dim) {
  if (dim < 2) throw std::invalid_argument("make_hashed_word_table: dim must be >= 2");
  WordTable table;
  table.dim = dim;
  for (const std::string& tok : vocabulary) {
    if (tok.empty() || table.vectors.count(tok)) continue;
    Rng rng(fnv1a(tok.data(), tok.size()));
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    table.vectors[tok] = v.normalized();
  }
  return table;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cleaned.push_back(static_cast<char>(std::tolower(u)));
    } else {
      cleaned.push_back(' ');
    }
  }
  std::vector<std::string> tokens;
  std::istringstream ss(cleaned);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

SentenceEmbedding embed_sentence(const WordTable& table, const std::string& text) {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) {
    throw std::invalid_argument("embed_sentence: empty or whitespace-only text");
  }
  SentenceEmbedding emb;
  emb.values = Eigen::VectorXd::Zero(table.dim);
  int in_vocab = 0;
  for (const std::string& tok : tokens) {
    auto it = table.vectors.find(tok);
    if (it != table.vectors.end()) {
      emb.values += it->second;
      ++in_vocab;
    }
  }
  if (in_vocab > 0) emb.values /= static_cast<double>(in_vocab);
  emb.oov_fraction =
      static_cast<double>(tokens.size() - static_cast<std::size_t>(in_vocab)) / tokens.size();
  return emb;
}

JointModel init_joint_model(int k, int word_dim, int num_attributes, std::uint64_t seed,
                            int hidden, int embed) {
  if (k < 1 || word_dim < 1 || num_attributes < 1) {
    throw std::invalid_argument("init_joint_model: dims must be >= 1");
  }
  JointModel m;
  m.k = k;
  m.word_dim = word_dim;
  m.num_attributes = num_attributes;
  m.shape_branch = init_network(
      {k, {{hidden, Activation::relu}, {embed, Activation::linear}}, derive_seed(seed, 1)});
  m.lang_branch = init_network(
      {word_dim, {{hidden, Activation::relu}, {embed, Activation::linear}}, derive_seed(seed, 2)});
  m.shape_head =
      init_network({hidden, {{num_attributes, Activation::sigmoid}}, derive_seed(seed, 3)});
  m.lang_head =
      init_network({hidden, {{num_attributes, Activation::sigmoid}}, derive_seed(seed, 4)});
  return m;
}

std::vector<GroundingExample> make_pairs(const std::vector<PositiveExample>& positives,
                                         double neg_ratio, std::uint64_t seed) {
  if (positives.empty()) throw std::invalid_argument("make_pairs: no positive examples");
  std::vector<int> ids;
  for (const auto& p : positives) ids.push_back(p.object_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) {
    throw std::invalid_argument("make_pairs: need at least 2 distinct objects to form negatives");
  }

  std::vector<GroundingExample> out;
  out.reserve(positives.size() * 2);
  for (const auto& p : positives) {
    GroundingExample e;
    e.shape = p.shape;
    e.description = p.description;
    e.attributes = p.attributes;
    e.label = 1;
    e.object_id = p.object_id;
    out.push_back(std::move(e));
  }

  Rng rng(derive_seed(seed, 0x9E6));
  const auto n_neg = static_cast<std::size_t>(std::llround(neg_ratio * positives.size()));
  for (std::size_t i = 0; i < n_neg; ++i) {
    const PositiveExample& anchor = positives[i % positives.size()];
    // Description from a different object.
    const PositiveExample* other = nullptr;
    do {
      other = &positives[rng.uniform_int(positives.size())];
    } while (other->object_id == anchor.object_id);
    GroundingExample e;
    e.shape = anchor.shape;
    e.description = other->description;
    e.attributes = anchor.attributes;
    e.label = -1;
    e.object_id = anchor.object_id;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

struct DevTrial {
  Eigen::VectorXd true_shape;
  std::vector<Eigen::VectorXd> distractors;
  SentenceEmbedding sentence;
};

std::vector<DevTrial> build_dev_trials(const std::vector<PositiveExample>& dev_positives,
                                       const WordTable& words, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_object;
  for (std::size_t i = 0; i < dev_positives.size(); ++i) {
    by_object[dev_positives[i].object_id].push_back(i);
  }
  std::vector<int> object_ids;
  for (const auto& [id, _] : by_object) object_ids.push_back(id);

  std::vector<DevTrial> trials;
  if (object_ids.size() < 3) return trials;  // caller falls back to similarity metric

  Rng rng(derive_seed(seed, 0xDE7));
  for (const auto& p : dev_positives) {
    DevTrial t;
    t.true_shape = p.shape;
    t.sentence = embed_sentence(words, p.description);
    // Two distinct distractor objects, each represented by one of its examples.
    std::size_t a, b;
    do {
      a = rng.uniform_int(object_ids.size());
    } while (object_ids[a] == p.object_id);
    do {
      b = rng.uniform_int(object_ids.size());
    } while (object_ids[b] == p.object_id || b == a);
    for (std::size_t d : {a, b}) {
      const auto& pool = by_object[object_ids[d]];
      t.distractors.push_back(dev_positives[pool[rng.uniform_int(pool.size())]].shape);
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

double dev_metric(const JointModel& model, const std::vector<DevTrial>& trials,
                  const std::vector<PositiveExample>& dev_positives, const WordTable& words) {
  if (!trials.empty()) {
    int hits = 0;
    for (const DevTrial& t : trials) {
      double sim_true = -2.0;
      try_joint_similarity(model, t.true_shape, t.sentence, &sim_true);
      bool best = true;
      for (const auto& d : t.distractors) {
        double sim_d = -2.0;
        try_joint_similarity(model, d, t.sentence, &sim_d);
        if (sim_d >= sim_true) {
          best = false;
          break;
        }
      }
      if (best) ++hits;
    }
    return static_cast<double>(hits) / trials.size();
  }
  // Fewer than 3 dev objects: mean positive similarity as a stand-in.
  double sum = 0.0;
  int n = 0;
  for (const auto& p : dev_positives) {
    double sim = -2.0;
    if (try_joint_similarity(model, p.shape, embed_sentence(words, p.description), &sim)) {
      sum += sim;
      ++n;
    }
  }
  return n > 0 ? sum / n : -2.0;
}

}  // namespace

JointTrainResult train_joint(const std::vector<GroundingExample>& pairs,
                             const JointTrainConfig& cfg,
                             const std::vector<PositiveExample>& dev_positives,
                             const WordTable& words) {
  if (pairs.empty()) throw std::invalid_argument("train_joint: empty training set");
  if (dev_positives.empty()) throw std::invalid_argument("train_joint: empty dev set");
  const Eigen::Index k = pairs.front().shape.size();
  Eigen::Index n_attr = 0;
  for (const auto& e : pairs) {
    if (e.shape.size() != k) throw std::invalid_argument("train_joint: shape dim mismatch");
    if (e.label == 1) {
      if (n_attr == 0) n_attr = e.attributes.size();
      if (e.attributes.size() != n_attr) {
        throw std::invalid_argument("train_joint: attribute dim mismatch");
      }
    }
  }
  if (n_attr == 0) throw std::invalid_argument("train_joint: no positive pairs");

  JointModel model = init_joint_model(static_cast<int>(k), words.dim, static_cast<int>(n_attr),
                                      cfg.seed, cfg.hidden, cfg.embed);
  AdamState adam_sb = make_adam_state(model.shape_branch, cfg.lr);
  AdamState adam_lb = make_adam_state(model.lang_branch, cfg.lr);
  AdamState adam_sh = make_adam_state(model.shape_head, cfg.lr);
  AdamState adam_lh = make_adam_state(model.lang_head, cfg.lr);

  // Sentence embeddings are reused heavily; compute one per distinct string.
  std::unordered_map<std::string, SentenceEmbedding> sentence_cache;
  auto sentence_of = [&](const std::string& text) -> const SentenceEmbedding& {
    auto it = sentence_cache.find(text);
    if (it == sentence_cache.end()) {
      it = sentence_cache.emplace(text, embed_sentence(words, text)).first;
    }
    return it->second;
  };

  const std::vector<DevTrial> dev_trials =
      build_dev_trials(dev_positives, words, derive_seed(cfg.seed, 0xDE1));

  JointTrainResult result;
  result.best_dev_top1 = -1e9;
  int evals_since_best = 0;

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x0DD));

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    std::size_t counted = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Gradients g_sb = Gradients::zeros_like(model.shape_branch);
      Gradients g_lb = Gradients::zeros_like(model.lang_branch);
      Gradients g_sh = Gradients::zeros_like(model.shape_head);
      Gradients g_lh = Gradients::zeros_like(model.lang_head);
      std::size_t batch_n = 0;
      bool head_touched = false;

      for (std::size_t bi = start; bi < end; ++bi) {
        const GroundingExample& e = pairs[order[bi]];
        const SentenceEmbedding& sent = sentence_of(e.description);
        if (sent.values.norm() < kDegenerateNorm) continue;  // all-OOV description

        ForwardTrace ts = forward(model.shape_branch, e.shape);
        ForwardTrace tl = forward(model.lang_branch, sent.values);
        const Eigen::VectorXd& u = ts.output();
        const Eigen::VectorXd& v = tl.output();
        if (u.norm() < kDegenerateNorm || v.norm() < kDegenerateNorm) continue;

        Eigen::VectorXd du, dv;
        const double sim = cosine_similarity_grad(u, v, du, dv);
        const double dsim = cosine_embedding_loss_dsim(sim, e.label, cfg.margin);
        double loss = cosine_embedding_loss(sim, e.label, cfg.margin);

        std::vector<Eigen::VectorXd> inject_s(ts.activations.size());
        std::vector<Eigen::VectorXd> inject_l(tl.activations.size());
        if (e.label == 1 && cfg.lambda_attr > 0.0) {
          ForwardTrace th_s = forward(model.shape_head, ts.activations[1]);
          ForwardTrace th_l = forward(model.lang_head, tl.activations[1]);
          loss += cfg.lambda_attr * (bce_loss(th_s.output(), e.attributes) +
                                     bce_loss(th_l.output(), e.attributes));
          Gradients gh_s = backward(model.shape_head, th_s,
                                    cfg.lambda_attr * bce_loss_grad(th_s.output(), e.attributes));
          Gradients gh_l = backward(model.lang_head, th_l,
                                    cfg.lambda_attr * bce_loss_grad(th_l.output(), e.attributes));
          inject_s[1] = gh_s.dinput;
          inject_l[1] = gh_l.dinput;
          g_sh.accumulate(gh_s);
          g_lh.accumulate(gh_l);
          head_touched = true;
        }

        g_sb.accumulate(backward(model.shape_branch, ts, dsim * du, &inject_s));
        g_lb.accumulate(backward(model.lang_branch, tl, dsim * dv, &inject_l));
        epoch_loss += loss;
        ++batch_n;
        ++counted;
      }

      if (batch_n == 0) continue;
      const double inv = 1.0 / static_cast<double>(batch_n);
      g_sb.scale(inv);
      g_lb.scale(inv);
      adam_step(model.shape_branch, g_sb, adam_sb);
      adam_step(model.lang_branch, g_lb, adam_lb);
      if (head_touched) {
        g_sh.scale(inv);
        g_lh.scale(inv);
        adam_step(model.shape_head, g_sh, adam_sh);
        adam_step(model.lang_head, g_lh, adam_lh);
      }
    }

    if (counted > 0) epoch_loss /= static_cast<double>(counted);
    result.epoch_losses.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) {
      result.diverged = true;
      break;
    }

    const double dev = dev_metric(model, dev_trials, dev_positives, words);
    result.dev_top1_history.push_back(dev);
    if (dev > result.best_dev_top1 + 1e-12) {
      result.best_dev_top1 = dev;
      result.best_epoch = epoch;
      result.model = model;  // snapshot
      evals_since_best = 0;
    } else {
      ++evals_since_best;
      if (evals_since_best >= cfg.patience) break;
    }
  }

  if (result.best_epoch < 0) result.model = model;  // never evaluated better than init
  return result;
}

double joint_similarity(const JointModel& model, const ShapeEmbedding& shape,
                        const SentenceEmbedding& sentence) {
  if (shape.size() != model.k) {
    throw std::invalid_argument("joint_similarity: shape embedding dim mismatch");
  }
  if (sentence.values.size() != model.word_dim) {
    throw std::invalid_argument("joint_similarity: sentence embedding dim mismatch");
  }
  const Eigen::VectorXd u = forward(model.shape_branch, shape).output();
  const Eigen::VectorXd v = forward(model.lang_branch, sentence.values).output();
  if (u.norm() < kDegenerateNorm || v.norm() < kDegenerateNorm) {
    throw std::runtime_error("joint_similarity: degenerate model (zero-norm branch output)");
  }
  return cosine_similarity(u, v);
}

AttributeVector predict_attributes_from_shape(const JointModel& model,
                                              const ShapeEmbedding& shape) {
  if (shape.size() != model.k) {
    throw std::invalid_argument("predict_attributes_from_shape: dim mismatch");
  }
  const ForwardTrace t = forward(model.shape_branch, shape);
  return forward(model.shape_head, t.activations[1]).output();
}

AttributeVector predict_attributes_from_language(const JointModel& model,
                                                 const SentenceEmbedding& sentence) {
  if (sentence.values.size() != model.word_dim) {
    throw std::invalid_argument("predict_attributes_from_language: dim mismatch");
  }
  const ForwardTrace t = forward(model.lang_branch, sentence.values);
  return forward(model.lang_head, t.activations[1]).output();
}

void save_joint_model(const JointModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_magic(out, "JNTM");
  detail::write_u32le(out, static_cast<std::uint32_t>(model.k));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.word_dim));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.num_attributes));
  write_network(out, model.shape_branch);
  write_network(out, model.lang_branch);
  write_network(out, model.shape_head);
  write_network(out, model.lang_head);
  if (!out) throw std::runtime_error(path + ": write failed");
}

JointModel load_joint_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open joint model file");
  detail::expect_magic(in, "JNTM", path);
  JointModel model;
  model.k = static_cast<int>(detail::read_u32le(in, "k"));
  model.word_dim = static_cast<int>(detail::read_u32le(in, "D"));
  model.num_attributes = static_cast<int>(detail::read_u32le(in, "A"));
  model.shape_branch = read_network(in, path);
  model.lang_branch = read_network(in, path);
  model.shape_head = read_network(in, path);
  model.lang_head = read_network(in, path);
  return model;
}

}  // namespace beo
