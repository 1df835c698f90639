#pragma once

// Myopic (greedy forward) search for a fallback policy.
//
// Starting from the chain [{}], whose estimate for every validation record is
// the target marginal, each round tries every one-dimension extension of the
// current set. A candidate predicts with only its dimensions and reuses the
// previous state's estimate where its own is degenerate. The value of a state
// is the mean reward -L(X, Xhat) over the validation set. The search moves to
// the best candidate while that strictly improves the value and stops at the
// full set. Fallback then walks the chain backwards.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stc/model.hpp"
#include "stc/parallel.hpp"
#include "stc/policy.hpp"

namespace stc {

struct PolicySearchReport {
  struct State {
    std::size_t round;  // 0 for the initial empty set
    DimSet dims;
    double value;  // mean reward
    bool accepted;
  };

  double loss_p = 2.0;
  std::vector<State> visited;
  std::vector<DimSet> chain;         // accepted sets, starting at {}
  std::vector<double> chain_values;  // aligned with chain

  // The chain the policy reverses: the accepted sets, closed by the full set
  // that prediction always tries first.
  std::vector<DimSet> policy_chain(std::size_t feature_dims) const {
    auto out = chain;
    if (out.empty() || out.back() != full_dimset(feature_dims)) out.push_back(full_dimset(feature_dims));
    return out;
  }

  nlohmann::json to_json(std::size_t feature_dims) const {
    nlohmann::json j;
    j["loss_p"] = loss_p;
    j["visited"] = nlohmann::json::array();
    for (const auto& s : visited) {
      j["visited"].push_back({{"round", s.round}, {"dims", s.dims}, {"value", s.value}, {"accepted", s.accepted}});
    }
    j["chain"] = chain;
    j["chain_values"] = chain_values;
    j["policy_chain"] = policy_chain(feature_dims);
    return j;
  }
};

struct PolicySearchResult {
  Policy policy;
  PolicySearchReport report;
};

inline PolicySearchResult learn_policy(const Model& model, std::span<const EncodedObservation> validation,
                                       double loss_p = 2.0, std::size_t workers = 1) {
  if (validation.empty()) throw std::invalid_argument("learn_policy: empty validation set");
  if (!(loss_p > 0.0)) throw std::invalid_argument("learn_policy: loss p must be positive");
  const std::size_t m = model.feature_dims();

  std::vector<WeightMap> truth;
  truth.reserve(validation.size());
  for (const auto& obs : validation) {
    const double total = total_of(obs.labels);
    if (obs.labels.empty() || !(total > 0.0)) {
      throw InvalidRecordError("learn_policy: validation record without a known label");
    }
    WeightMap t;
    for (const auto& [i, w] : obs.labels) t.emplace(i, w / total);
    truth.push_back(std::move(t));
  }

  auto value_of = [&](const std::vector<WeightMap>& preds) {
    double sum = 0.0;
    for (std::size_t n = 0; n < preds.size(); ++n) sum -= p_norm_loss(preds[n], truth[n], loss_p);
    return sum / static_cast<double>(preds.size());
  };

  PolicySearchReport report;
  report.loss_p = loss_p;
  DimSet current;
  std::vector<WeightMap> previous(validation.size(), model.target_marginal().as_map());
  double current_value = value_of(previous);
  report.visited.push_back({0, current, current_value, true});
  report.chain.push_back(current);
  report.chain_values.push_back(current_value);

  for (std::size_t round = 1; current.size() < m; ++round) {
    std::vector<DimSet> candidates;
    for (std::size_t d = 0; d < m; ++d) {
      if (std::find(current.begin(), current.end(), d) != current.end()) continue;
      DimSet c = current;
      c.insert(std::upper_bound(c.begin(), c.end(), d), d);
      candidates.push_back(std::move(c));
    }
    for (const auto& c : candidates) model.level(c);

    std::vector<std::vector<WeightMap>> preds(candidates.size());
    std::vector<double> values(candidates.size());
    parallel_for(candidates.size(), workers, [&](std::size_t k) {
      auto& p = preds[k];
      p.reserve(validation.size());
      for (std::size_t n = 0; n < validation.size(); ++n) {
        auto est = model.predict_at(validation[n], candidates[k], false);
        p.push_back(est ? est->as_map() : previous[n]);
      }
      values[k] = value_of(p);
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (values[k] > values[best]) best = k;
    }
    const bool improves = values[best] > current_value;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      report.visited.push_back({round, candidates[k], values[k], improves && k == best});
    }
    if (!improves) break;
    current = candidates[best];
    current_value = values[best];
    previous = std::move(preds[best]);
    report.chain.push_back(current);
    report.chain_values.push_back(current_value);
  }

  auto chain = report.policy_chain(m);
  std::vector<DimSet> steps(chain.rbegin(), chain.rend());
  Policy policy(std::move(steps));
  policy.validate(m);
  return {std::move(policy), std::move(report)};
}

}  // namespace stc
