#include "beo/evalhar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "beo/rng.hpp"

namespace beo {

Splits split_dataset(const Manifest& manifest, std::array<double, 3> ratios, std::uint64_t seed) {
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  }
  const std::size_t n = manifest.objects.size();
  if (n < 10) throw std::invalid_argument("split_dataset: need at least 10 objects");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& obj : manifest.objects) ids.push_back(obj.id);
  Rng rng(derive_seed(seed, 0x591));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(ids[i - 1], ids[rng.uniform_int(i)]);
  }

  auto n_train = static_cast<std::size_t>(std::lround(ratios[0] * static_cast<double>(n)));
  auto n_dev = static_cast<std::size_t>(std::lround(ratios[1] * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);

  Splits s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  s.dev.assign(ids.begin() + static_cast<long>(n_train),
               ids.begin() + static_cast<long>(n_train + n_dev));
  s.test.assign(ids.begin() + static_cast<long>(n_train + n_dev), ids.end());
  return s;
}

AttributeVector binarize_attributes(const Eigen::VectorXd& mean_scores) {
  AttributeVector bits(mean_scores.size());
  for (Eigen::Index i = 0; i < mean_scores.size(); ++i) {
    if (mean_scores[i] < 1.0 || mean_scores[i] > 5.0) {
      throw std::invalid_argument("binarize_attributes: score outside [1,5]");
    }
    bits[i] = mean_scores[i] > 3.0 ? 1.0 : 0.0;
  }
  return bits;
}

std::vector<int> rank_by_similarity(const std::vector<double>& sims) {
  std::vector<int> order(sims.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sims[a] > sims[b]; });
  return order;
}

std::vector<int> run_trial(const JointModel& model, const RetrievalTrial& trial,
                           const WordTable& words) {
  if (trial.true_index < 0 || trial.true_index >= static_cast<int>(trial.candidates.size())) {
    throw std::invalid_argument("run_trial: true index out of range");
  }
  const SentenceEmbedding sent = embed_sentence(words, trial.description);
  std::vector<double> sims;
  sims.reserve(trial.candidates.size());
  for (const auto& c : trial.candidates) sims.push_back(joint_similarity(model, c, sent));
  return rank_by_similarity(sims);
}

Condition Condition::full_view() {
  return {"full_view", ViewRegime::varied(), ViewRegime::varied(), EmbeddingSource::eq1_projection};
}
Condition Condition::partial_view() {
  return {"partial_view", ViewRegime::varied(), ViewRegime::varied(), EmbeddingSource::regressor};
}
Condition Condition::view_transfer() {
  return {"view_transfer", ViewRegime::frontal(), ViewRegime::side_rear(),
          EmbeddingSource::regressor};
}
Condition Condition::by_name(const std::string& name) {
  if (name == "full_view") return full_view();
  if (name == "partial_view") return partial_view();
  if (name == "view_transfer") return view_transfer();
  throw std::invalid_argument("unknown condition '" + name + "'");
}

namespace {

// Candidate embeddings per object: a single Eq. 1 projection, or one
// regressor embedding per seeded evaluation image.
std::vector<std::vector<ShapeEmbedding>> candidate_embeddings(
    const ModelBundle& models, const Condition& condition,
    const std::vector<EvalObject>& objects, int images_per_object, std::uint64_t seed) {
  std::vector<std::vector<ShapeEmbedding>> out(objects.size());
  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    if (condition.source == EmbeddingSource::eq1_projection) {
      out[oi].push_back(project(*models.subspace, flatten(objects[oi].grid)));
    } else {
      if (!models.regressor) {
        throw std::invalid_argument("eval: condition needs a regressor model");
      }
      for (int r = 0; r < images_per_object; ++r) {
        Camera cam = sample_viewpoint(condition.eval_regime,
                                      derive_seed(seed, 0xE7A1, oi, static_cast<std::uint64_t>(r)));
        cam.width = models.regressor->image_width;
        cam.height = models.regressor->image_height;
        out[oi].push_back(embed_depth(*models.regressor, render_depth(objects[oi].grid, cam)));
      }
    }
  }
  return out;
}

}  // namespace

RetrievalEval eval_retrieval(const ModelBundle& models, const Condition& condition,
                             const std::vector<EvalObject>& test_objects, int images_per_object,
                             std::uint64_t seed, bool shuffle_labels) {
  if (test_objects.size() < 3) {
    throw std::invalid_argument("eval_retrieval: need at least 3 test objects");
  }
  if (images_per_object < 1) {
    throw std::invalid_argument("eval_retrieval: images_per_object must be >= 1");
  }
  const auto embeddings =
      candidate_embeddings(models, condition, test_objects, images_per_object, seed);

  RetrievalEval result;
  int top1_hits = 0;
  int top2_hits = 0;

  for (std::size_t oi = 0; oi < test_objects.size(); ++oi) {
    for (std::size_t di = 0; di < test_objects[oi].descriptions.size(); ++di) {
      for (int rep = 0; rep < images_per_object; ++rep) {
        // Trial randomness depends only on (seed, object, description, rep),
        // so every condition evaluates the same trials.
        Rng rng(derive_seed(seed, 0x731A1, oi * 10007 + di, static_cast<std::uint64_t>(rep)));
        std::size_t d1, d2;
        do {
          d1 = rng.uniform_int(test_objects.size());
        } while (d1 == oi);
        do {
          d2 = rng.uniform_int(test_objects.size());
        } while (d2 == oi || d2 == d1);
        const int true_pos = static_cast<int>(rng.uniform_int(3));

        std::array<std::size_t, 3> cand_obj{};
        cand_obj[static_cast<std::size_t>(true_pos)] = oi;
        cand_obj[static_cast<std::size_t>((true_pos + 1) % 3)] = d1;
        cand_obj[static_cast<std::size_t>((true_pos + 2) % 3)] = d2;

        RetrievalTrial trial;
        trial.true_index = true_pos;
        for (std::size_t c = 0; c < 3; ++c) {
          const auto& pool = embeddings[cand_obj[c]];
          trial.candidates.push_back(pool[rng.uniform_int(pool.size())]);
        }
        if (shuffle_labels) {
          const std::size_t ro = rng.uniform_int(test_objects.size());
          const auto& descs = test_objects[ro].descriptions;
          trial.description = descs[rng.uniform_int(descs.size())];
        } else {
          trial.description = test_objects[oi].descriptions[di];
        }

        const std::vector<int> ranking = run_trial(*models.joint, trial, *models.words);
        if (ranking[0] == trial.true_index) ++top1_hits;
        if (ranking[0] == trial.true_index || ranking[1] == trial.true_index) ++top2_hits;
        ++result.trials;
      }
    }
  }

  result.top1 = static_cast<double>(top1_hits) / result.trials;
  result.top2 = static_cast<double>(top2_hits) / result.trials;
  return result;
}

std::vector<double> eval_attributes(const ModelBundle& models, const Condition& condition,
                                    const std::vector<EvalObject>& test_objects,
                                    int images_per_object, std::uint64_t seed) {
  if (test_objects.empty()) throw std::invalid_argument("eval_attributes: no test objects");
  const Eigen::Index a = test_objects.front().scores.size();
  if (a != models.joint->num_attributes) {
    throw std::invalid_argument("eval_attributes: attribute count mismatch between manifest and model");
  }
  const auto embeddings =
      candidate_embeddings(models, condition, test_objects, images_per_object, seed);

  std::vector<long> tp(static_cast<std::size_t>(a), 0), fp(static_cast<std::size_t>(a), 0),
      fn(static_cast<std::size_t>(a), 0);
  for (std::size_t oi = 0; oi < test_objects.size(); ++oi) {
    const AttributeVector truth = binarize_attributes(test_objects[oi].scores);
    for (const auto& emb : embeddings[oi]) {
      const AttributeVector pred = predict_attributes_from_shape(*models.joint, emb);
      for (Eigen::Index i = 0; i < a; ++i) {
        const bool p = pred[i] >= 0.5;
        const bool t = truth[i] >= 0.5;
        if (p && t) ++tp[static_cast<std::size_t>(i)];
        if (p && !t) ++fp[static_cast<std::size_t>(i)];
        if (!p && t) ++fn[static_cast<std::size_t>(i)];
      }
    }
  }

  std::vector<double> f1(static_cast<std::size_t>(a), 1.0);
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const long denom = 2 * tp[i] + fp[i] + fn[i];
    if (denom > 0) f1[i] = 2.0 * static_cast<double>(tp[i]) / static_cast<double>(denom);
  }
  return f1;
}

}  // namespace beo
