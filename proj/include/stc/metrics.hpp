#pragma once

// Classification metrics: per-class precision/recall/F1, support-weighted and
// macro averages, accuracy, and pairwise win tables across models.

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stc {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // true occurrences
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Classes are the union of predicted and true labels.
template <class Label>
struct MetricReport {
  std::map<Label, ClassMetrics> per_class;
  Averages weighted;
  Averages macro;
  double accuracy = 0.0;
};

template <class Label>
MetricReport<Label> score(std::span<const Label> predictions, std::span<const Label> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("score: length mismatch");
  if (truths.empty()) throw std::invalid_argument("score: no samples");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<Label, Counts> counts;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < truths.size(); ++n) {
    if (predictions[n] == truths[n]) {
      ++counts[truths[n]].tp;
      ++correct;
    } else {
      ++counts[predictions[n]].fp;
      ++counts[truths[n]].fn;
    }
  }
  MetricReport<Label> r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());
  const double total = static_cast<double>(truths.size());
  for (const auto& [label, c] : counts) {
    ClassMetrics m;
    m.support = c.tp + c.fn;
    m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = m.support ? static_cast<double>(c.tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = static_cast<double>(m.support) / total;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
    r.macro.precision += m.precision;
    r.macro.recall += m.recall;
    r.macro.f1 += m.f1;
    r.per_class.emplace(label, m);
  }
  const double k = static_cast<double>(r.per_class.size());
  r.macro.precision /= k;
  r.macro.recall /= k;
  r.macro.f1 /= k;
  return r;
}

template <class Label>
MetricReport<Label> score(const std::vector<Label>& predictions, const std::vector<Label>& truths) {
  return score(std::span<const Label>(predictions), std::span<const Label>(truths));
}

// wins[a][b] = fraction of runs where model a scored strictly higher than b.
struct PairwiseTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> wins;
};

// scores[model][run]
inline PairwiseTable pairwise_table(std::vector<std::string> names, const std::vector<std::vector<double>>& scores) {
  if (names.size() != scores.size()) throw std::invalid_argument("pairwise_table: names and scores disagree");
  const std::size_t m = names.size();
  PairwiseTable t{std::move(names), std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0))};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      if (scores[a].size() != scores[b].size() || scores[a].empty()) {
        throw std::invalid_argument("pairwise_table: run counts disagree");
      }
      std::size_t won = 0;
      for (std::size_t r = 0; r < scores[a].size(); ++r) won += scores[a][r] > scores[b][r];
      t.wins[a][b] = static_cast<double>(won) / static_cast<double>(scores[a].size());
    }
  }
  return t;
}

}  // namespace stc
