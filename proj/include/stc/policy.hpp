#pragma once

// Fallback contraction policies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stc/dataset.hpp"
#include "stc/errors.hpp"
#include "stc/sparse_tensor.hpp"

namespace stc {

using DimSet = std::vector<std::size_t>;  // ascending feature-dimension ordinals

inline std::string dimset_to_string(const DimSet& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(s[k]);
  }
  return out + "}";
}

inline DimSet full_dimset(std::size_t feature_dims) {
  DimSet s(feature_dims);
  for (std::size_t k = 0; k < feature_dims; ++k) s[k] = k;
  return s;
}

// Sequence of feature-dimension sets to keep, tried in order until the
// prediction is not degenerate. steps().front() is the full set and
// steps().back() is the empty set (the target marginal).
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<DimSet> steps) : steps_(std::move(steps)) {
    for (auto& s : steps_) std::sort(s.begin(), s.end());
  }

  // Drops the highest remaining dimension first: {0..m}, {0..m-1}, ..., {}.
  // For a single feature dimension this is the chain {0}, {}.
  static Policy drop_last_first(std::size_t feature_dims) {
    std::vector<DimSet> steps;
    for (std::size_t n = feature_dims + 1; n-- > 0;) {
      DimSet s(n);
      for (std::size_t k = 0; k < n; ++k) s[k] = k;
      steps.push_back(std::move(s));
    }
    return Policy(std::move(steps));
  }

  const std::vector<DimSet>& steps() const noexcept { return steps_; }
  bool empty() const noexcept { return steps_.empty(); }

  void validate(std::size_t feature_dims) const {
    if (steps_.empty()) throw std::invalid_argument("policy: no steps");
    if (steps_.front() != full_dimset(feature_dims)) {
      throw std::invalid_argument("policy: first step must keep every feature dimension");
    }
    if (!steps_.back().empty()) throw std::invalid_argument("policy: last step must be the empty set");
    for (std::size_t k = 1; k < steps_.size(); ++k) {
      const auto& prev = steps_[k - 1];
      const auto& cur = steps_[k];
      if (std::adjacent_find(cur.begin(), cur.end()) != cur.end() || cur.size() >= prev.size() ||
          !std::includes(prev.begin(), prev.end(), cur.begin(), cur.end())) {
        throw std::invalid_argument("policy: steps must be strictly nested, got " + dimset_to_string(prev) +
                                    " then " + dimset_to_string(cur));
      }
    }
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      if (k) out += ", ";
      out += dimset_to_string(steps_[k]);
    }
    return out;
  }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::vector<DimSet> steps_;
};

// (1/2) (sum_i |x_i - xhat_i|^p)^(1/p) over the union of both supports.
inline double p_norm_loss(const WeightMap& x, const WeightMap& xhat, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("p_norm_loss: p must be positive");
  double s = 0.0;
  auto a = x.begin();
  auto b = xhat.begin();
  while (a != x.end() || b != xhat.end()) {
    double d;
    if (b == xhat.end() || (a != x.end() && a->first < b->first)) {
      d = a->second;
      ++a;
    } else if (a == x.end() || b->first < a->first) {
      d = b->second;
      ++b;
    } else {
      d = a->second - b->second;
      ++a;
      ++b;
    }
    s += std::pow(std::abs(d), p);
  }
  return 0.5 * std::pow(s, 1.0 / p);
}

// Contracts a query's feature vector onto the dimensions in `keep`. Entries
// whose kept coordinates are all unknown are dropped; keep = {} yields the
// scalar observation X = 1.
inline WeightMap contract_query(const WeightMap& features, const DimSet& keep) {
  WeightMap out;
  if (keep.empty()) {
    out[MultiIndex{}] = 1.0;
    return out;
  }
  for (const auto& [j, w] : features) {
    MultiIndex r = j.select(keep);
    if (std::all_of(r.begin(), r.end(), [](Index c) { return c == kUnknownIndex; })) continue;
    out[r] += w;
  }
  return out;
}

// Contracts every feature dimension of an observation that is not in `keep`.
// Merged entries lose their phase (theta = 0).
inline EncodedObservation apply_step(const EncodedObservation& obs, const DimSet& keep) {
  const std::size_t dims = obs.joint.feature_dims();
  if (!std::is_sorted(keep.begin(), keep.end()) || std::adjacent_find(keep.begin(), keep.end()) != keep.end() ||
      (!keep.empty() && keep.back() >= dims)) {
    throw ShapeError("apply_step: keep set " + dimset_to_string(keep) + " not within " + std::to_string(dims) +
                     " dimensions");
  }
  if (keep.size() == dims) return obs;
  return EncodedObservation{contract_features(obs.joint, keep), contract_query(obs.features, keep), obs.labels, {}};
}

}  // namespace stc
