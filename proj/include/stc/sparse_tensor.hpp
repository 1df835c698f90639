#pragma once

// Sparse multi-index count tensors.
//
// A SparseCounts holds the weights of a tensor T_{i_0..i_n j_0..j_m} whose
// first n+1 coordinates index targets and last m+1 coordinates index
// features. Entries are grouped by feature index so that prediction, which
// walks the observed features of a query, touches one row per feature.
// Zero weights are never stored.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stc/errors.hpp"

namespace stc {

using Index = std::uint32_t;

// Coordinate used for a query value that is absent from one dimension of the
// vocabulary. It never matches a corpus entry and disappears under contraction
// of its dimension.
inline constexpr Index kUnknownIndex = std::numeric_limits<Index>::max();

// Ordered tuple of coordinates, compared lexicographically.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<Index> coords) : coords_(coords) {}
  explicit MultiIndex(std::vector<Index> coords) : coords_(std::move(coords)) {}

  std::size_t size() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }
  Index operator[](std::size_t k) const { return coords_[k]; }
  auto begin() const noexcept { return coords_.begin(); }
  auto end() const noexcept { return coords_.end(); }
  const std::vector<Index>& coords() const noexcept { return coords_; }

  bool has_unknown() const {
    return std::find(coords_.begin(), coords_.end(), kUnknownIndex) != coords_.end();
  }

  // Keeps the coordinates at the given ascending positions.
  MultiIndex select(std::span<const std::size_t> dims) const {
    std::vector<Index> out;
    out.reserve(dims.size());
    for (std::size_t d : dims) out.push_back(coords_.at(d));
    return MultiIndex(std::move(out));
  }

  MultiIndex without(std::size_t k) const {
    std::vector<Index> out;
    out.reserve(coords_.size() - 1);
    for (std::size_t d = 0; d < coords_.size(); ++d) {
      if (d != k) out.push_back(coords_[d]);
    }
    return MultiIndex(std::move(out));
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t d = 0; d < coords_.size(); ++d) {
      if (d) s += ',';
      s += coords_[d] == kUnknownIndex ? std::string("?") : std::to_string(coords_[d]);
    }
    return s + ")";
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
    return std::lexicographical_compare_three_way(a.coords_.begin(), a.coords_.end(),
                                                  b.coords_.begin(), b.coords_.end());
  }

 private:
  std::vector<Index> coords_;
};

// Sparse vector over feature (or target) multi-indices.
using WeightMap = std::map<MultiIndex, double>;

inline double total_of(const WeightMap& m) {
  double s = 0.0;
  for (const auto& [_, w] : m) s += w;
  return s;
}

class SparseCounts {
 public:
  struct Cell {
    MultiIndex target;
    double weight;
  };
  // Cells of one feature index, sorted by target.
  using Row = std::vector<Cell>;

  SparseCounts() : SparseCounts(1, 1) {}
  SparseCounts(std::size_t target_dims, std::size_t feature_dims)
      : target_dims_(target_dims), feature_dims_(feature_dims) {
    if (target_dims_ == 0) throw ShapeError("SparseCounts: target_dims must be >= 1");
  }

  std::size_t target_dims() const noexcept { return target_dims_; }
  std::size_t feature_dims() const noexcept { return feature_dims_; }

  // Adds weight to entry (target, feature). Zero is a no-op; negative or
  // non-finite weights are rejected.
  void add(const MultiIndex& target, const MultiIndex& feature, double weight) {
    check_key(target, feature);
    if (!std::isfinite(weight) || weight < 0.0) {
      throw std::invalid_argument("SparseCounts: weights must be finite and nonnegative");
    }
    if (weight == 0.0) return;
    Row& row = rows_[feature];
    auto it = std::lower_bound(row.begin(), row.end(), target,
                               [](const Cell& c, const MultiIndex& t) { return c.target < t; });
    if (it != row.end() && it->target == target) {
      it->weight += weight;
    } else {
      row.insert(it, Cell{target, weight});
      ++nnz_;
    }
  }

  double weight(const MultiIndex& target, const MultiIndex& feature) const {
    auto r = rows_.find(feature);
    if (r == rows_.end()) return 0.0;
    auto it = std::lower_bound(r->second.begin(), r->second.end(), target,
                               [](const Cell& c, const MultiIndex& t) { return c.target < t; });
    return (it != r->second.end() && it->target == target) ? it->weight : 0.0;
  }

  void accumulate(const SparseCounts& other) {
    if (other.target_dims_ != target_dims_ || other.feature_dims_ != feature_dims_) {
      throw ShapeError("accumulate: shape mismatch (" + shape_string() + " vs " +
                       other.shape_string() + ")");
    }
    for (const auto& [feature, row] : other.rows_) {
      for (const Cell& c : row) add(c.target, feature, c.weight);
    }
  }

  void scale(double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
      throw std::invalid_argument("SparseCounts::scale: factor must be positive");
    }
    for (auto& [_, row] : rows_) {
      for (Cell& c : row) c.weight *= factor;
    }
  }

  std::size_t nnz() const noexcept { return nnz_; }
  bool empty() const noexcept { return nnz_ == 0; }

  double total_weight() const {
    double s = 0.0;
    for (const auto& [_, row] : rows_) {
      for (const Cell& c : row) s += c.weight;
    }
    return s;
  }

  const std::map<MultiIndex, Row>& rows() const noexcept { return rows_; }

  const Row* row(const MultiIndex& feature) const {
    auto it = rows_.find(feature);
    return it == rows_.end() ? nullptr : &it->second;
  }

  // Visits (target, feature, weight) in (feature, target) order.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [feature, row] : rows_) {
      for (const Cell& c : row) fn(c.target, feature, c.weight);
    }
  }

  std::string shape_string() const {
    return std::to_string(target_dims_) + "x" + std::to_string(feature_dims_);
  }

  friend bool operator==(const SparseCounts& a, const SparseCounts& b) {
    if (a.target_dims_ != b.target_dims_ || a.feature_dims_ != b.feature_dims_ ||
        a.nnz_ != b.nnz_ || a.rows_.size() != b.rows_.size()) {
      return false;
    }
    auto ia = a.rows_.begin();
    for (auto ib = b.rows_.begin(); ib != b.rows_.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.size() != ib->second.size()) return false;
      for (std::size_t k = 0; k < ia->second.size(); ++k) {
        if (ia->second[k].target != ib->second[k].target ||
            ia->second[k].weight != ib->second[k].weight) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  void check_key(const MultiIndex& target, const MultiIndex& feature) const {
    if (target.size() != target_dims_ || feature.size() != feature_dims_) {
      throw ShapeError("SparseCounts: key " + target.to_string() + feature.to_string() +
                       " does not match shape " + shape_string());
    }
  }

  std::size_t target_dims_;
  std::size_t feature_dims_;
  std::size_t nnz_ = 0;
  std::map<MultiIndex, Row> rows_;
};

inline SparseCounts accumulate(SparseCounts acc, const SparseCounts& obs) {
  acc.accumulate(obs);
  return acc;
}

// Sums out feature dimension k.
inline SparseCounts contract_feature_dim(const SparseCounts& t, std::size_t k) {
  if (k >= t.feature_dims()) {
    throw ShapeError("contract_feature_dim: dimension " + std::to_string(k) +
                     " out of range for " + std::to_string(t.feature_dims()) + " feature dims");
  }
  SparseCounts out(t.target_dims(), t.feature_dims() - 1);
  t.for_each([&](const MultiIndex& target, const MultiIndex& feature, double w) {
    out.add(target, feature.without(k), w);
  });
  return out;
}

// Sums out every feature dimension not listed in `keep` (ascending ordinals).
inline SparseCounts contract_features(const SparseCounts& t, std::span<const std::size_t> keep) {
  if (!std::is_sorted(keep.begin(), keep.end()) ||
      std::adjacent_find(keep.begin(), keep.end()) != keep.end() ||
      (!keep.empty() && keep.back() >= t.feature_dims())) {
    throw ShapeError("contract_features: keep set must be ascending, unique and in range");
  }
  SparseCounts out(t.target_dims(), keep.size());
  t.for_each([&](const MultiIndex& target, const MultiIndex& feature, double w) {
    out.add(target, feature.select(keep), w);
  });
  return out;
}

// Sum over targets for each feature index.
inline WeightMap marginal_over_targets(const SparseCounts& t) {
  WeightMap out;
  for (const auto& [feature, row] : t.rows()) {
    double s = 0.0;
    for (const auto& c : row) s += c.weight;
    out.emplace_hint(out.end(), feature, s);
  }
  return out;
}

// Sum over features for each target index.
inline WeightMap marginal_over_features(const SparseCounts& t) {
  WeightMap out;
  t.for_each([&](const MultiIndex& target, const MultiIndex&, double w) { out[target] += w; });
  return out;
}

// Sums out the feature dimensions of a sparse feature vector that are not in
// `keep`. Entries carrying an unknown coordinate in a kept dimension survive.
inline WeightMap contract_weights(const WeightMap& x, std::span<const std::size_t> keep) {
  WeightMap out;
  for (const auto& [feature, w] : x) out[feature.select(keep)] += w;
  return out;
}

}  // namespace stc
