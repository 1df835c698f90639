#pragma once

// Native explanations.
//
// Local:  features of one query ranked by |addend| = Ht_j^h Ct_ij^p X_j^p for
//         the predicted target i*.
// Global: all corpus features ranked by Ht_j^h Ct_ij^p for a fixed target.
// Aggregate: local scores summed over many queries, grouped by predicted
//         target.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stc/model.hpp"
#include "stc/parallel.hpp"

namespace stc {

struct FeatureAttribution {
  MultiIndex feature;
  DimSet dims;  // feature dimensions `feature` lives in
  std::string feature_name;
  MultiIndex target;
  std::string target_name;
  double score = 0.0;  // raw modulus
  double share = 0.0;  // score / sum of scores in the ranking
  double angle = 0.0;
};

namespace detail {

inline void rank_and_share(std::vector<FeatureAttribution>& v) {
  std::sort(v.begin(), v.end(), [](const FeatureAttribution& a, const FeatureAttribution& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.dims != b.dims) return a.dims > b.dims;  // uncontracted features first
    return a.feature < b.feature;
  });
  double total = 0.0;
  for (const auto& a : v) total += a.score;
  for (auto& a : v) a.share = total > 0.0 ? a.score / total : 0.0;
}

inline MultiIndex require_target(const Model& model, std::string_view name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto bar = name.find('|', start);
    parts.emplace_back(name.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  auto idx = model.vocabulary().encode_target(parts);
  if (!idx) throw LookupError("unknown target '" + std::string(name) + "'");
  return *idx;
}

}  // namespace detail

inline std::vector<FeatureAttribution> explain_local(const Model& model, const EncodedObservation& query,
                                                     std::optional<MultiIndex> target = std::nullopt) {
  const Prediction pred = model.predict(query, true);
  if (pred.terminal) return {};
  const MultiIndex chosen = target ? *target : ranked_targets(pred, 1).front();
  const auto& vocab = model.vocabulary();
  std::vector<FeatureAttribution> out;
  for (const auto& c : pred.contributions) {
    if (c.target != chosen) continue;
    out.push_back({c.feature, pred.dims, vocab.decode_feature(c.feature, pred.dims), c.target,
                   vocab.decode_target(c.target), c.modulus, 0.0, c.angle});
  }
  detail::rank_and_share(out);
  return out;
}

inline std::vector<FeatureAttribution> explain_global(const Model& model, const MultiIndex& target) {
  const auto& vocab = model.vocabulary();
  if (target.size() != vocab.targets().size()) throw LookupError("target arity does not match the model");
  for (std::size_t d = 0; d < target.size(); ++d) {
    if (target[d] >= vocab.targets()[d].size()) throw LookupError("unknown target " + target.to_string());
  }
  const DimSet dims = full_dimset(model.feature_dims());
  auto level = model.level(dims);
  auto pos = std::lower_bound(level->targets.begin(), level->targets.end(), target);
  std::vector<FeatureAttribution> out;
  if (pos == level->targets.end() || *pos != target) return out;
  const auto t = static_cast<std::uint32_t>(pos - level->targets.begin());
  const std::string target_name = vocab.decode_target(target);
  for (const auto& [feature, terms] : level->terms) {
    for (const auto& term : terms) {
      if (term.target != t) continue;
      out.push_back({feature, dims, vocab.decode_feature(feature), target, target_name, term.amplitude, 0.0,
                     term.phase});
    }
  }
  detail::rank_and_share(out);
  return out;
}

inline std::vector<FeatureAttribution> explain_global(const Model& model, std::string_view target_name) {
  return explain_global(model, detail::require_target(model, target_name));
}

// Features with the largest Ht_j^h, i.e. the most discriminative across all
// targets. Undefined for h = 0, where every weight is 1.
inline std::vector<FeatureAttribution> discriminative_features(const Model& model, std::size_t k) {
  if (model.hyperparams().h == 0.0) {
    throw std::invalid_argument("discriminative_features: requires h != 0");
  }
  const DimSet dims = full_dimset(model.feature_dims());
  auto level = model.level(dims);
  std::vector<FeatureAttribution> out;
  out.reserve(level->entropy.size());
  for (const auto& [feature, ht] : level->entropy) {
    out.push_back({feature, dims, model.vocabulary().decode_feature(feature), {}, {},
                   std::pow(ht, model.hyperparams().h), 0.0, 0.0});
  }
  detail::rank_and_share(out);
  if (out.size() > k) out.resize(k);
  return out;
}

// Sums local scores over `queries`, grouped by each query's predicted target.
// Queries answered by the target marginal carry no feature evidence.
inline std::map<MultiIndex, std::vector<FeatureAttribution>> aggregate_local(
    const Model& model, std::span<const EncodedObservation> queries, std::size_t workers = 1) {
  model.warm();
  std::vector<Prediction> preds(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t k) { preds[k] = model.predict(queries[k], true); });

  struct Acc {
    double score = 0.0;
    std::complex<double> phasor{0.0, 0.0};
  };
  std::map<MultiIndex, std::map<std::pair<DimSet, MultiIndex>, Acc>> sums;
  for (const auto& pred : preds) {
    if (pred.terminal) continue;
    const MultiIndex top = ranked_targets(pred, 1).front();
    auto& bucket = sums[top];
    for (const auto& c : pred.contributions) {
      if (c.target != top) continue;
      auto& a = bucket[{pred.dims, c.feature}];
      a.score += c.modulus;
      a.phasor += std::polar(c.modulus, c.angle);
    }
  }
  const auto& vocab = model.vocabulary();
  std::map<MultiIndex, std::vector<FeatureAttribution>> out;
  for (const auto& [target, bucket] : sums) {
    auto& ranking = out[target];
    const std::string target_name = vocab.decode_target(target);
    for (const auto& [key, acc] : bucket) {
      ranking.push_back({key.second, key.first, vocab.decode_feature(key.second, key.first), target, target_name,
                         acc.score, 0.0, std::arg(acc.phasor)});
    }
    detail::rank_and_share(ranking);
  }
  return out;
}

// Delimiter-separated table: target, feature, score, share, angle.
inline void write_attributions(std::ostream& out, std::span<const FeatureAttribution> rows, char delim = '\t',
                               bool header = true) {
  if (header) out << "target" << delim << "feature" << delim << "score" << delim << "share" << delim << "angle\n";
  const auto old_precision = out.precision(12);
  for (const auto& r : rows) {
    out << r.target_name << delim << r.feature_name << delim << r.score << delim << r.share << delim << r.angle
        << '\n';
  }
  out.precision(old_precision);
}

}  // namespace stc
