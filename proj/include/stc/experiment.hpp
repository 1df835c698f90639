#pragma once

// Experiment harness: repeated random train/test splits and single holdout
// runs, with report tables.
//
// Split algorithm (portable across implementations): for run r, seed a
// std::mt19937_64 with seed + r, Fisher-Yates shuffle the record positions
// 0..N-1 (for k = N-1 down to 1 swap k with a draw uniform on [0, k], using
// rejection sampling on the raw 64-bit output), and take the first
// ceil(N * test_fraction) positions as the test set.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stc/dataset.hpp"
#include "stc/metrics.hpp"
#include "stc/model.hpp"
#include "stc/parallel.hpp"

namespace stc {

struct NamedConfig {
  std::string name;
  Hyperparams hyper;
};

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline Split random_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-9));
  if (n_test == 0 || n_test >= n) throw std::invalid_argument("split leaves an empty train or test set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[uniform_below(rng, k + 1)]);
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return s;
}

// Label string of a record in the vocabulary's target-dimension order, using
// the first value given for each dimension.
inline std::string truth_label(const RawRecord& rec, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t d = 0; d < vocab.targets().size(); ++d) {
    if (d) out += '|';
    for (const auto& l : rec.labels) {
      if (l.dimension == vocab.targets()[d].name()) {
        out += l.value;
        break;
      }
    }
  }
  return out;
}

struct MeanMetrics {
  double accuracy = 0.0;
  Averages weighted;
  Averages macro;
};

struct ConfigSummary {
  std::string name;
  Hyperparams hyper;
  MeanMetrics mean;
  std::vector<double> weighted_f1;  // per run
  std::vector<double> macro_f1;     // per run
};

struct RepeatedSplitResult {
  std::vector<ConfigSummary> configs;
  PairwiseTable pairwise;
};

struct ExperimentOptions {
  std::size_t runs = 100;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool normalize = false;
};

namespace detail {

struct RunOutcome {
  std::vector<MetricReport<std::string>> reports;  // one per config
};

inline RunOutcome run_split(std::span<const RawRecord> records, const Split& split,
                            std::span<const NamedConfig> configs, bool normalize) {
  std::vector<RawRecord> train;
  std::vector<RawRecord> test;
  for (auto k : split.train) train.push_back(records[k]);
  for (auto k : split.test) test.push_back(records[k]);
  Vocabulary vocab;
  auto train_obs = encode(train, vocab, {true, normalize});
  auto test_obs = encode(test, vocab, {false, normalize});
  std::vector<std::string> truths;
  for (const auto& r : test) truths.push_back(truth_label(r, vocab));

  RunOutcome out;
  Model model = Model::fit(train_obs, vocab, configs.front().hyper);
  for (const auto& cfg : configs) {
    model.set_hyperparams(cfg.hyper);
    std::vector<std::string> preds;
    preds.reserve(test_obs.size());
    for (const auto& q : test_obs) {
      preds.push_back(vocab.decode_target(model.predict_labels(q, 1).front()));
    }
    out.reports.push_back(score(preds, truths));
  }
  return out;
}

}  // namespace detail

inline RepeatedSplitResult repeated_split_experiment(std::span<const RawRecord> records,
                                                     std::span<const NamedConfig> configs,
                                                     const ExperimentOptions& opts) {
  if (opts.runs == 0) throw std::invalid_argument("number of runs must be >= 1");
  if (configs.empty()) throw std::invalid_argument("no configurations to evaluate");
  for (const auto& c : configs) c.hyper.validate();
  // Validate the split parameters up front so bad input fails fast.
  random_split(records.size(), opts.test_fraction, opts.seed);

  std::vector<detail::RunOutcome> runs(opts.runs);
  parallel_for(opts.runs, opts.workers, [&](std::size_t r) {
    runs[r] = detail::run_split(records, random_split(records.size(), opts.test_fraction, opts.seed + r), configs,
                                opts.normalize);
  });

  RepeatedSplitResult result;
  std::vector<std::string> names;
  std::vector<std::vector<double>> f1s;
  const double n = static_cast<double>(opts.runs);
  for (std::size_t c = 0; c < configs.size(); ++c) {
    ConfigSummary s{configs[c].name, configs[c].hyper, {}, {}, {}};
    for (const auto& run : runs) {
      const auto& rep = run.reports[c];
      s.mean.accuracy += rep.accuracy / n;
      s.mean.weighted.precision += rep.weighted.precision / n;
      s.mean.weighted.recall += rep.weighted.recall / n;
      s.mean.weighted.f1 += rep.weighted.f1 / n;
      s.mean.macro.precision += rep.macro.precision / n;
      s.mean.macro.recall += rep.macro.recall / n;
      s.mean.macro.f1 += rep.macro.f1 / n;
      s.weighted_f1.push_back(rep.weighted.f1);
      s.macro_f1.push_back(rep.macro.f1);
    }
    names.push_back(s.name);
    f1s.push_back(s.weighted_f1);
    result.configs.push_back(std::move(s));
  }
  result.pairwise = pairwise_table(std::move(names), f1s);
  return result;
}

struct HoldoutResult {
  MetricReport<std::string> report;
  std::vector<std::string> predictions;
  std::vector<std::string> truths;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
};

inline HoldoutResult holdout_experiment(std::span<const RawRecord> train, std::span<const RawRecord> test,
                                        const Hyperparams& config, std::size_t workers = 1, bool normalize = false) {
  if (train.empty() || test.empty()) throw std::invalid_argument("holdout: train and test sets must be nonempty");
  using clock = std::chrono::steady_clock;
  HoldoutResult out;
  const auto t0 = clock::now();
  Vocabulary vocab;
  auto train_obs = encode(train, vocab, {true, normalize});
  Model model = Model::fit(train_obs, vocab, config);
  model.warm();
  const auto t1 = clock::now();
  auto test_obs = encode(test, vocab, {false, normalize});
  auto preds = predict_batch(model, test_obs, workers, false);
  const auto t2 = clock::now();
  for (std::size_t k = 0; k < test.size(); ++k) {
    out.predictions.push_back(vocab.decode_target(ranked_targets(preds[k], 1).front()));
    out.truths.push_back(truth_label(test[k], vocab));
  }
  out.report = score(out.predictions, out.truths);
  out.train_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

// ---------------------------------------------------------------------------
// Report tables

inline void write_summary_table(std::ostream& out, const RepeatedSplitResult& r, char delim = '\t') {
  out << "model" << delim << "precision_w" << delim << "recall_w" << delim << "f1_w" << delim << "f1_macro" << delim
      << "accuracy\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& c : r.configs) {
    out << c.name << delim << c.mean.weighted.precision << delim << c.mean.weighted.recall << delim
        << c.mean.weighted.f1 << delim << c.mean.macro.f1 << delim << c.mean.accuracy << '\n';
  }
  out << std::defaultfloat;
}

inline void write_pairwise_table(std::ostream& out, const PairwiseTable& t, char delim = '\t') {
  out << "model";
  for (const auto& n : t.names) out << delim << n;
  out << delim << "mean\n" << std::fixed << std::setprecision(2);
  for (std::size_t a = 0; a < t.names.size(); ++a) {
    out << t.names[a];
    double sum = 0.0;
    for (std::size_t b = 0; b < t.names.size(); ++b) {
      out << delim << t.wins[a][b];
      sum += t.wins[a][b];
    }
    const double mean = t.names.size() > 1 ? sum / static_cast<double>(t.names.size() - 1) : 0.0;
    out << delim << mean << '\n';
  }
  out << std::defaultfloat;
}

inline void write_holdout_table(std::ostream& out, const std::string& name, const HoldoutResult& r,
                                char delim = '\t') {
  out << "metric" << delim << name << '\n' << std::fixed << std::setprecision(3);
  out << "precision_macro" << delim << r.report.macro.precision << '\n';
  out << "recall_macro" << delim << r.report.macro.recall << '\n';
  out << "f1_macro" << delim << r.report.macro.f1 << '\n';
  out << "accuracy" << delim << r.report.accuracy << '\n';
  out << "train_seconds" << delim << r.train_seconds << '\n';
  out << "predict_seconds" << delim << r.predict_seconds << '\n' << std::defaultfloat;
}

inline void write_class_table(std::ostream& out, const MetricReport<std::string>& r, char delim = '\t') {
  out << "class" << delim << "precision" << delim << "recall" << delim << "f1" << delim << "support\n"
      << std::fixed << std::setprecision(3);
  for (const auto& [label, m] : r.per_class) {
    out << label << delim << m.precision << delim << m.recall << delim << m.f1 << delim << m.support << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace stc
