#pragma once

// Sparse Tensor Classifier model: corpus, derived weights and prediction.
//
// For a query X_j with phases theta_j the unnormalized target weights are
//
//   X_i = | sum_j exp(i(theta_j - phi_ij)) Ht_j^h Ct_ij^p X_j^p |^(1/p)
//   Ct_ij = C_ij / ((sum_i' C_i'j)^(1-b) (sum_j' C_ij')^b)
//
// with Ht_j the entropy weight of feature j. The model returns X_i / sum X_i.
// When every X_i is zero the policy contracts feature dimensions of query and
// corpus until a nonzero estimate appears, ending at the target marginal C_i.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stc/dataset.hpp"
#include "stc/errors.hpp"
#include "stc/policy.hpp"
#include "stc/sparse_tensor.hpp"

namespace stc {

struct Hyperparams {
  double h = 1.0;  // entropy exponent
  double b = 1.0;  // balance exponent
  double p = 0.5;  // probability amplitude

  static constexpr Hyperparams quantum() { return {1.0, 1.0, 0.5}; }
  static constexpr Hyperparams classical() { return {1.0, 0.0, 1.0}; }

  void validate() const {
    if (!std::isfinite(h) || h < 0.0) throw std::invalid_argument("hyperparameter h must be >= 0");
    if (!std::isfinite(b) || b < 0.0) throw std::invalid_argument("hyperparameter b must be >= 0");
    if (!std::isfinite(p) || p <= 0.0) throw std::invalid_argument("hyperparameter p must be > 0");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// Model phases phi_ij, keyed by (target, feature). Absent entries are 0.
class PhaseTable {
 public:
  void set(const MultiIndex& target, const MultiIndex& feature, double angle) {
    if (!std::isfinite(angle)) throw std::invalid_argument("phase angles must be finite");
    if (angle == 0.0) {
      phases_.erase({target, feature});
    } else {
      phases_[{target, feature}] = angle;
    }
  }
  double get(const MultiIndex& target, const MultiIndex& feature) const {
    auto it = phases_.find({target, feature});
    return it == phases_.end() ? 0.0 : it->second;
  }
  bool empty() const noexcept { return phases_.empty(); }
  std::size_t size() const noexcept { return phases_.size(); }
  const auto& entries() const noexcept { return phases_; }

  friend bool operator==(const PhaseTable&, const PhaseTable&) = default;

 private:
  std::map<std::pair<MultiIndex, MultiIndex>, double> phases_;
};

// ---------------------------------------------------------------------------
// Corpus-derived weights

// Ht_j = 1 - H_j / ln(T), where H_j is the entropy of P(i|j) on the
// artificially balanced corpus P_ij = C_ij / sum_j' C_ij'. T is the size of
// the target index space; T <= 1 gives Ht_j = 1.
inline WeightMap entropy_weights(const SparseCounts& corpus, double target_space_size) {
  WeightMap out;
  const WeightMap rows = marginal_over_features(corpus);
  const double log_t = target_space_size > 1.0 ? std::log(target_space_size) : 0.0;
  std::vector<double> balanced;
  for (const auto& [feature, row] : corpus.rows()) {
    if (log_t == 0.0) {
      out.emplace_hint(out.end(), feature, 1.0);
      continue;
    }
    balanced.clear();
    double col = 0.0;
    for (const auto& c : row) {
      balanced.push_back(c.weight / rows.at(c.target));
      col += balanced.back();
    }
    double h = 0.0;
    for (double pij : balanced) {
      const double cond = pij / col;
      if (cond > 0.0 && cond < 1.0) h -= cond * std::log(cond);
    }
    out.emplace_hint(out.end(), feature, std::clamp(1.0 - h / log_t, 0.0, 1.0));
  }
  return out;
}

// Uses the number of distinct targets present in the corpus as T.
inline WeightMap entropy_weights(const SparseCounts& corpus) {
  return entropy_weights(corpus, static_cast<double>(marginal_over_features(corpus).size()));
}

// Ct_ij on the nonzero entries of the corpus.
inline SparseCounts weight_tensor(const SparseCounts& corpus, double b) {
  if (!std::isfinite(b) || b < 0.0) throw std::invalid_argument("weight_tensor: b must be >= 0");
  const WeightMap rows = marginal_over_features(corpus);
  SparseCounts out(corpus.target_dims(), corpus.feature_dims());
  for (const auto& [feature, row] : corpus.rows()) {
    double col = 0.0;
    for (const auto& c : row) col += c.weight;
    const double col_factor = std::pow(col, 1.0 - b);
    for (const auto& c : row) {
      out.add(c.target, feature, c.weight / (col_factor * std::pow(rows.at(c.target), b)));
    }
  }
  return out;
}

// Derived tensors for one contraction level of the corpus.
struct Level {
  struct Term {
    std::uint32_t target;  // position in `targets`
    double balanced;       // Ct_ij
    double amplitude;      // Ht_j^h Ct_ij^p
    double phase;          // phi_ij
  };

  DimSet dims;
  std::vector<MultiIndex> targets;      // ascending
  std::vector<double> target_marginal;  // C_i, aligned with targets
  WeightMap entropy;                    // Ht_j
  std::map<MultiIndex, std::vector<Term>> terms;

  const std::vector<Term>* find(const MultiIndex& feature) const {
    auto it = terms.find(feature);
    return it == terms.end() ? nullptr : &it->second;
  }
};

inline Level build_level(const SparseCounts& corpus, DimSet dims, const Hyperparams& hp, double target_space_size,
                         const PhaseTable* phases) {
  Level level;
  level.dims = std::move(dims);
  const WeightMap rows = marginal_over_features(corpus);
  std::map<MultiIndex, std::uint32_t> position;
  for (const auto& [target, w] : rows) {
    position.emplace(target, static_cast<std::uint32_t>(level.targets.size()));
    level.targets.push_back(target);
    level.target_marginal.push_back(w);
  }
  level.entropy = entropy_weights(corpus, target_space_size);
  const SparseCounts balanced = weight_tensor(corpus, hp.b);
  for (const auto& [feature, row] : balanced.rows()) {
    const double ht = std::pow(level.entropy.at(feature), hp.h);
    auto& out = level.terms.emplace_hint(level.terms.end(), feature, std::vector<Level::Term>{})->second;
    out.reserve(row.size());
    for (const auto& c : row) {
      const double phi = phases ? phases->get(c.target, feature) : 0.0;
      out.push_back({position.at(c.target), c.weight, ht * std::pow(c.weight, hp.p), phi});
    }
  }
  return level;
}

// ---------------------------------------------------------------------------
// Predictions

struct Contribution {
  MultiIndex feature;  // in the space of Prediction::dims
  MultiIndex target;
  double modulus;  // Ht_j^h Ct_ij^p X_j^p
  double angle;    // theta_j - phi_ij
};

struct Prediction {
  std::vector<std::pair<MultiIndex, double>> distribution;  // ascending target order
  std::vector<Contribution> contributions;
  std::size_t fallback_depth = 0;  // policy steps applied
  DimSet dims;                     // feature dimensions used by the final estimate
  bool terminal = false;           // estimate is the target marginal

  double probability(const MultiIndex& target) const {
    auto it = std::lower_bound(distribution.begin(), distribution.end(), target,
                               [](const auto& e, const MultiIndex& t) { return e.first < t; });
    return (it != distribution.end() && it->first == target) ? it->second : 0.0;
  }

  WeightMap as_map() const { return WeightMap(distribution.begin(), distribution.end()); }
};

// Targets ordered by probability, ties broken by ascending multi-index.
inline std::vector<MultiIndex> ranked_targets(const Prediction& pred, std::size_t k) {
  std::vector<std::pair<MultiIndex, double>> v = pred.distribution;
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<MultiIndex> out;
  for (std::size_t n = 0; n < std::min(k, v.size()); ++n) out.push_back(v[n].first);
  return out;
}

inline constexpr double kDegenerateThreshold = 1e-300;

// Evaluates the prediction rule at one level without fallback. Returns
// nullopt when the estimate is degenerate (sum_i X_i below threshold).
inline std::optional<Prediction> evaluate_level(const Level& level, const WeightMap& x, const WeightMap& theta,
                                                const Hyperparams& hp, bool with_contributions) {
  const std::size_t n = level.targets.size();
  bool use_complex = !theta.empty();
  if (!use_complex) {
    for (const auto& [feature, _] : x) {
      if (const auto* row = level.find(feature)) {
        for (const auto& t : *row) {
          if (t.phase != 0.0) {
            use_complex = true;
            break;
          }
        }
      }
      if (use_complex) break;
    }
  }

  Prediction pred;
  std::vector<double> real_sum;
  std::vector<std::complex<double>> complex_sum;
  if (use_complex) {
    complex_sum.assign(n, {0.0, 0.0});
  } else {
    real_sum.assign(n, 0.0);
  }
  for (const auto& [feature, xj] : x) {
    if (!(xj > 0.0)) continue;
    const auto* row = level.find(feature);
    if (!row) continue;
    const double xp = std::pow(xj, hp.p);
    const double th = use_complex ? [&] {
      auto it = theta.find(feature);
      return it == theta.end() ? 0.0 : it->second;
    }()
                                  : 0.0;
    for (const auto& t : *row) {
      const double modulus = t.amplitude * xp;
      if (use_complex) {
        complex_sum[t.target] += std::polar(modulus, th - t.phase);
      } else {
        real_sum[t.target] += modulus;
      }
      if (with_contributions) {
        pred.contributions.push_back({feature, level.targets[t.target], modulus, th - t.phase});
      }
    }
  }
  // X_i = |A_i|^(1/p) overflows or underflows for small p, so evaluate
  // (|A_i| / max|A|)^(1/p) and test the threshold in log space.
  std::vector<double> xi(n);
  double max_mag = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    xi[k] = use_complex ? std::abs(complex_sum[k]) : std::abs(real_sum[k]);
    max_mag = std::max(max_mag, xi[k]);
  }
  if (!(max_mag > 0.0) || !std::isfinite(max_mag)) return std::nullopt;
  double total = 0.0;
  for (auto& v : xi) {
    v = v > 0.0 ? std::pow(v / max_mag, 1.0 / hp.p) : 0.0;
    total += v;
  }
  if (!(std::log(max_mag) / hp.p + std::log(total) >= std::log(kDegenerateThreshold))) return std::nullopt;
  pred.distribution.reserve(n);
  for (std::size_t k = 0; k < n; ++k) pred.distribution.emplace_back(level.targets[k], xi[k] / total);
  pred.dims = level.dims;
  return pred;
}

// ---------------------------------------------------------------------------

class Model {
 public:
  Model(Vocabulary vocab, SparseCounts corpus, Hyperparams hyper, PhaseTable phases, Policy policy)
      : vocab_(std::move(vocab)),
        corpus_(std::move(corpus)),
        hyper_(hyper),
        phases_(std::move(phases)),
        policy_(std::move(policy)),
        cache_(std::make_shared<Cache>()) {
    hyper_.validate();
    check_shape();
    policy_.validate(corpus_.feature_dims());
  }

  // C_ij = sum_n X_ij^(n).
  static Model fit(std::span<const EncodedObservation> observations, Vocabulary vocab,
                   Hyperparams hyper = Hyperparams::quantum(), PhaseTable phases = {},
                   std::optional<Policy> policy = std::nullopt) {
    if (observations.empty()) throw std::invalid_argument("empty training set");
    SparseCounts corpus(vocab.targets().size(), vocab.features().size());
    for (const auto& obs : observations) corpus.accumulate(obs.joint);
    if (corpus.empty()) throw std::invalid_argument("training set has no feature-label co-occurrences");
    Policy pol = policy ? std::move(*policy) : Policy::drop_last_first(corpus.feature_dims());
    return Model(std::move(vocab), std::move(corpus), hyper, std::move(phases), std::move(pol));
  }

  // Adds new observations to the corpus. `vocab` must extend the model's
  // vocabulary (same dimensions, existing values as a prefix).
  void update(std::span<const EncodedObservation> observations, const Vocabulary& vocab) {
    if (!vocab_.is_prefix_of(vocab)) throw ShapeError("update: vocabulary does not extend the model's");
    SparseCounts next = corpus_;
    for (const auto& obs : observations) next.accumulate(obs.joint);
    corpus_ = std::move(next);
    vocab_ = vocab;
    cache_ = std::make_shared<Cache>();
  }

  void update(std::span<const EncodedObservation> observations) { update(observations, vocab_); }

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const SparseCounts& corpus() const noexcept { return corpus_; }
  const Hyperparams& hyperparams() const noexcept { return hyper_; }
  const PhaseTable& phases() const noexcept { return phases_; }
  const Policy& policy() const noexcept { return policy_; }
  std::size_t feature_dims() const noexcept { return corpus_.feature_dims(); }

  void set_hyperparams(const Hyperparams& hp) {
    hp.validate();
    hyper_ = hp;
    cache_ = std::make_shared<Cache>();
  }
  void set_phases(PhaseTable phases) {
    phases_ = std::move(phases);
    cache_ = std::make_shared<Cache>();
  }
  void set_policy(Policy policy) {
    policy.validate(corpus_.feature_dims());
    policy_ = std::move(policy);
  }

  // Derived weights on the corpus contracted to `dims`; built once and cached.
  std::shared_ptr<const Level> level(const DimSet& dims) const {
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->levels[dims];
    if (!slot) {
      const bool full = dims.size() == corpus_.feature_dims();
      const double t = vocab_.target_space_size();
      if (full) {
        slot = std::make_shared<const Level>(build_level(corpus_, dims, hyper_, t, &phases_));
      } else {
        // Merged corpus entries carry no phase.
        slot = std::make_shared<const Level>(build_level(contract_features(corpus_, dims), dims, hyper_, t, nullptr));
      }
    }
    return slot;
  }

  // Builds every level the policy can reach.
  void warm() const {
    for (const auto& step : policy_.steps()) level(step);
    level(full_dimset(feature_dims()));
  }

  // C_i / sum_i C_i.
  Prediction target_marginal() const {
    auto full = level(full_dimset(feature_dims()));
    double total = 0.0;
    for (double w : full->target_marginal) total += w;
    Prediction pred;
    for (std::size_t k = 0; k < full->targets.size(); ++k) {
      pred.distribution.emplace_back(full->targets[k], full->target_marginal[k] / total);
    }
    pred.terminal = true;
    return pred;
  }

  // Estimate using only the feature dimensions in `dims`; nullopt when
  // degenerate. Query phases survive only when nothing is contracted.
  std::optional<Prediction> predict_at(const EncodedObservation& query, const DimSet& dims,
                                       bool with_contributions = true) const {
    if (dims.empty()) return target_marginal();
    auto lvl = level(dims);
    if (dims.size() == feature_dims()) {
      return evaluate_level(*lvl, query.features, query.phases, hyper_, with_contributions);
    }
    return evaluate_level(*lvl, contract_query(query.features, dims), {}, hyper_, with_contributions);
  }

  Prediction predict(const EncodedObservation& query, bool with_contributions = true) const {
    check_query(query);
    const auto& steps = policy_.steps();
    for (std::size_t depth = 0; depth < steps.size(); ++depth) {
      if (auto pred = predict_at(query, steps[depth], with_contributions)) {
        pred->fallback_depth = depth;
        pred->dims = steps[depth];
        return std::move(*pred);
      }
    }
    throw std::logic_error("policy ended without an estimate");
  }

  std::vector<MultiIndex> predict_labels(const EncodedObservation& query, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("predict_labels: k must be >= 1");
    return ranked_targets(predict(query, false), k);
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<DimSet, std::shared_ptr<const Level>> levels;
  };

  void check_shape() const {
    if (corpus_.target_dims() != vocab_.targets().size() || corpus_.feature_dims() != vocab_.features().size()) {
      throw ShapeError("model: corpus shape " + corpus_.shape_string() + " does not match vocabulary");
    }
    if (corpus_.empty()) throw std::invalid_argument("model: empty corpus");
  }

  void check_query(const EncodedObservation& query) const {
    const auto& dims = vocab_.features();
    for (const auto& [j, _] : query.features) {
      if (j.size() != dims.size()) throw ShapeError("query feature arity does not match the model");
      for (std::size_t d = 0; d < j.size(); ++d) {
        if (j[d] != kUnknownIndex && j[d] >= dims[d].size()) {
          throw ShapeError("query feature index " + j.to_string() + " outside the vocabulary");
        }
      }
    }
  }

  Vocabulary vocab_;
  SparseCounts corpus_;
  Hyperparams hyper_;
  PhaseTable phases_;
  Policy policy_;
  std::shared_ptr<Cache> cache_;
};

inline Model fit(std::span<const EncodedObservation> observations, Vocabulary vocab,
                 Hyperparams hyper = Hyperparams::quantum(), PhaseTable phases = {},
                 std::optional<Policy> policy = std::nullopt) {
  return Model::fit(observations, std::move(vocab), hyper, std::move(phases), std::move(policy));
}

}  // namespace stc
