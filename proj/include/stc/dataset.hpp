#pragma once

// Ingestion of tabular and token data, vocabularies, and conversion of raw
// records into sparse observations X_ij.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stc/errors.hpp"
#include "stc/sparse_tensor.hpp"
#include "stc/tokenizer.hpp"

namespace stc {

// Bidirectional string <-> index map for one tensor dimension.
class Dimension {
 public:
  Dimension() = default;
  explicit Dimension(std::string name) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<std::string>& values() const noexcept { return values_; }

  std::optional<Index> find(std::string_view value) const {
    auto it = lookup_.find(std::string(value));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  Index intern(std::string_view value) {
    auto [it, inserted] = lookup_.try_emplace(std::string(value), static_cast<Index>(values_.size()));
    if (inserted) {
      if (values_.size() >= kUnknownIndex) throw ShapeError("Dimension: index space exhausted");
      values_.emplace_back(value);
    }
    return it->second;
  }

  const std::string& value(Index k) const {
    if (k >= values_.size()) {
      throw LookupError("dimension '" + name_ + "': index " + std::to_string(k) + " out of range");
    }
    return values_[k];
  }

  friend bool operator==(const Dimension& a, const Dimension& b) {
    return a.name_ == b.name_ && a.values_ == b.values_;
  }

 private:
  std::string name_;
  std::vector<std::string> values_;
  std::unordered_map<std::string, Index> lookup_;
};

// Index sets of the target dimensions i and the feature dimensions j.
class Vocabulary {
 public:
  std::vector<Dimension>& targets() noexcept { return targets_; }
  std::vector<Dimension>& features() noexcept { return features_; }
  const std::vector<Dimension>& targets() const noexcept { return targets_; }
  const std::vector<Dimension>& features() const noexcept { return features_; }

  std::optional<std::size_t> target_dim(std::string_view name) const { return find_dim(targets_, name); }
  std::optional<std::size_t> feature_dim(std::string_view name) const { return find_dim(features_, name); }

  std::size_t add_target_dim(const std::string& name) { return add_dim(targets_, name); }
  std::size_t add_feature_dim(const std::string& name) { return add_dim(features_, name); }

  // Number of target multi-indices, prod_k |targets[k]|.
  double target_space_size() const {
    double n = targets_.empty() ? 0.0 : 1.0;
    for (const auto& d : targets_) n *= static_cast<double>(d.size());
    return n;
  }

  std::string decode_target(const MultiIndex& i) const { return decode(targets_, i, all_dims(i.size())); }
  std::string decode_feature(const MultiIndex& j) const { return decode(features_, j, all_dims(j.size())); }
  // Decodes a feature index that lives in the contracted space of `dims`.
  std::string decode_feature(const MultiIndex& j, std::span<const std::size_t> dims) const {
    return decode(features_, j, std::vector<std::size_t>(dims.begin(), dims.end()));
  }

  std::optional<MultiIndex> encode_target(std::span<const std::string> values) const {
    if (values.size() != targets_.size()) return std::nullopt;
    std::vector<Index> coords;
    for (std::size_t d = 0; d < values.size(); ++d) {
      auto k = targets_[d].find(values[d]);
      if (!k) return std::nullopt;
      coords.push_back(*k);
    }
    return MultiIndex(std::move(coords));
  }

  // True when `other` holds the same dimensions with this vocabulary's values
  // as a prefix of each.
  bool is_prefix_of(const Vocabulary& other) const {
    auto prefix = [](const std::vector<Dimension>& a, const std::vector<Dimension>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t d = 0; d < a.size(); ++d) {
        if (a[d].name() != b[d].name() || a[d].size() > b[d].size()) return false;
        if (!std::equal(a[d].values().begin(), a[d].values().end(), b[d].values().begin())) return false;
      }
      return true;
    };
    return prefix(targets_, other.targets_) && prefix(features_, other.features_);
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.targets_ == b.targets_ && a.features_ == b.features_;
  }

 private:
  static std::vector<std::size_t> all_dims(std::size_t n) {
    std::vector<std::size_t> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = k;
    return d;
  }
  static std::optional<std::size_t> find_dim(const std::vector<Dimension>& dims, std::string_view name) {
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (dims[d].name() == name) return d;
    }
    return std::nullopt;
  }
  static std::size_t add_dim(std::vector<Dimension>& dims, const std::string& name) {
    if (auto d = find_dim(dims, name)) return *d;
    dims.emplace_back(name);
    return dims.size() - 1;
  }
  static std::string decode(const std::vector<Dimension>& dims, const MultiIndex& idx,
                            const std::vector<std::size_t>& which) {
    if (idx.size() != which.size()) throw ShapeError("decode: arity mismatch");
    std::string out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k) out += '|';
      out += idx[k] == kUnknownIndex ? std::string("?") : dims.at(which[k]).value(idx[k]);
    }
    return out;
  }

  std::vector<Dimension> targets_;
  std::vector<Dimension> features_;
};

struct Label {
  std::string dimension;
  std::string value;
};

struct FeatureToken {
  std::string dimension;
  std::string token;
  double multiplicity = 1.0;
  std::optional<double> phase;  // theta, radians
};

struct RawRecord {
  std::vector<Label> labels;
  std::vector<FeatureToken> features;
};

struct EncodedObservation {
  SparseCounts joint;  // X_ij; only entries whose indices are all known
  WeightMap features;  // X_j
  WeightMap labels;    // target multi-indices of the record, each with weight 1
  WeightMap phases;    // theta_j; absent entries are 0
};

// ---------------------------------------------------------------------------
// Tabular input

enum class TabularMode { kFold, kTensor };
enum class MissingPolicy { kToken, kDrop };

struct TabularOptions {
  std::vector<std::string> target_columns;
  std::vector<std::string> ignore_columns;
  TabularMode mode = TabularMode::kFold;
  MissingPolicy missing = MissingPolicy::kToken;
  char delimiter = ',';
  std::string fold_dimension = "f";
};

// Reads delimiter-separated rows with double-quote quoting ("" escapes a
// quote inside a quoted field). Blank lines are skipped.
inline std::vector<std::vector<std::string>> read_delimited(std::istream& in, char delimiter,
                                                            std::vector<std::size_t>* line_numbers = nullptr) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
      if (line_numbers) line_numbers->push_back(row_line);
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  for (std::size_t k = 0; k < text.size(); ++k) {
    char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (!field_started && row.empty()) row_line = line;
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == delimiter) {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else if (c == '\r') {
      // CRLF line endings
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field starting near line " + std::to_string(row_line));
  end_row();
  return rows;
}

inline bool is_missing_cell(std::string_view v) { return v.empty() || v == "?"; }

inline std::vector<RawRecord> load_tabular(std::istream& in, const TabularOptions& opts) {
  std::vector<std::size_t> lines;
  auto rows = read_delimited(in, opts.delimiter, &lines);
  if (rows.empty()) throw ParseError("tabular input: missing header row");
  const auto& header = rows.front();
  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> target_cols;
  for (const auto& t : opts.target_columns) {
    auto c = column_of(t);
    if (!c) throw SchemaError("target column '" + t + "' not found in header");
    target_cols.push_back(*c);
  }
  for (const auto& t : opts.ignore_columns) {
    if (!column_of(t)) throw SchemaError("ignored column '" + t + "' not found in header");
  }
  if (opts.mode == TabularMode::kTensor && opts.missing == MissingPolicy::kDrop) {
    throw SchemaError("missing-value policy 'drop' requires fold mode");
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool is_target = std::find(target_cols.begin(), target_cols.end(), c) != target_cols.end();
    bool ignored = std::find(opts.ignore_columns.begin(), opts.ignore_columns.end(), header[c]) !=
                   opts.ignore_columns.end();
    if (!is_target && !ignored) feature_cols.push_back(c);
  }

  std::vector<RawRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ParseError("line " + std::to_string(lines[r]) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(row.size()));
    }
    RawRecord rec;
    for (std::size_t c : target_cols) {
      if (!is_missing_cell(row[c])) rec.labels.push_back({header[c], row[c]});
    }
    for (std::size_t c : feature_cols) {
      const bool missing = is_missing_cell(row[c]);
      if (missing && opts.missing == MissingPolicy::kDrop) continue;
      std::string token = header[c] + "=" + (missing ? std::string("NA") : row[c]);
      const std::string& dim = opts.mode == TabularMode::kFold ? opts.fold_dimension : header[c];
      rec.features.push_back({dim, std::move(token), 1.0, std::nullopt});
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Token records: one JSON object per line.
//
//   {"labels": ["a", "b"] | "a" | {"dim": ["a"]},
//    "tokens": ["w", "w", "x"] | {"w": 2, "x": 1},
//    "text":   "raw text, tokenized with tokenize()",
//    "features": {"dim": [...] | {...}},
//    "phases": {"w": 0.5}}
//
// "tokens" and "text" feed the feature dimension "token"; plain label lists
// feed the target dimension "label".

inline constexpr const char* kDefaultLabelDimension = "label";
inline constexpr const char* kDefaultTokenDimension = "token";

namespace detail {

inline void append_counted_tokens(const std::vector<std::string>& tokens, const std::string& dim,
                                  std::vector<FeatureToken>& out) {
  std::unordered_map<std::string, std::size_t> pos;
  const std::size_t base = out.size();
  for (const auto& t : tokens) {
    auto [it, inserted] = pos.try_emplace(t, out.size() - base);
    if (inserted) {
      out.push_back({dim, t, 1.0, std::nullopt});
    } else {
      out[base + it->second].multiplicity += 1.0;
    }
  }
}

inline void parse_token_field(const nlohmann::json& v, const std::string& dim, std::vector<FeatureToken>& out) {
  if (v.is_array()) {
    std::vector<std::string> tokens;
    for (const auto& t : v) tokens.push_back(t.get<std::string>());
    append_counted_tokens(tokens, dim, out);
  } else if (v.is_object()) {
    for (const auto& [tok, count] : v.items()) {
      double m = count.get<double>();
      if (!(m > 0.0)) throw ParseError("token '" + tok + "' has non-positive count");
      out.push_back({dim, tok, m, std::nullopt});
    }
  } else {
    throw ParseError("token field must be a list or an object");
  }
}

inline void parse_label_field(const nlohmann::json& v, std::vector<Label>& out) {
  if (v.is_string()) {
    out.push_back({kDefaultLabelDimension, v.get<std::string>()});
  } else if (v.is_array()) {
    for (const auto& l : v) out.push_back({kDefaultLabelDimension, l.get<std::string>()});
  } else if (v.is_object()) {
    for (const auto& [dim, vals] : v.items()) {
      if (vals.is_string()) {
        out.push_back({dim, vals.get<std::string>()});
      } else {
        for (const auto& l : vals) out.push_back({dim, l.get<std::string>()});
      }
    }
  } else {
    throw ParseError("\"labels\" must be a string, a list, or an object");
  }
}

}  // namespace detail

inline RawRecord parse_token_record(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  RawRecord rec;
  if (j.contains("labels")) detail::parse_label_field(j["labels"], rec.labels);
  if (j.contains("tokens")) detail::parse_token_field(j["tokens"], kDefaultTokenDimension, rec.features);
  if (j.contains("text")) {
    detail::append_counted_tokens(tokenize(j["text"].get<std::string>()), kDefaultTokenDimension, rec.features);
  }
  if (j.contains("features")) {
    if (!j["features"].is_object()) throw ParseError("\"features\" must be an object");
    for (const auto& [dim, v] : j["features"].items()) detail::parse_token_field(v, dim, rec.features);
  }
  if (j.contains("phases")) {
    for (const auto& [tok, angle] : j["phases"].items()) {
      for (auto& f : rec.features) {
        if (f.token == tok) f.phase = angle.get<double>();
      }
    }
  }
  return rec;
}

inline std::vector<RawRecord> load_token_records(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_token_record(line));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline nlohmann::json token_record_to_json(const RawRecord& rec) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& l : rec.labels) labels[l.dimension].push_back(l.value);
  nlohmann::json features = nlohmann::json::object();
  for (const auto& f : rec.features) features[f.dimension][f.token] = f.multiplicity;
  return {{"labels", labels}, {"features", features}};
}

// Reads a directory tree <root>/<label>/<document>: each file is one record
// labelled with its parent directory name, tokenized with tokenize().
inline std::vector<RawRecord> load_text_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ParseError("not a directory: " + root.string());
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  std::vector<RawRecord> records;
  for (const auto& cls : classes) {
    std::vector<fs::path> docs;
    for (const auto& e : fs::directory_iterator(cls)) {
      if (e.is_regular_file()) docs.push_back(e.path());
    }
    std::sort(docs.begin(), docs.end());
    for (const auto& doc : docs) {
      std::ifstream f(doc, std::ios::binary);
      if (!f) throw ParseError("cannot read " + doc.string());
      std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      RawRecord rec;
      rec.labels.push_back({kDefaultLabelDimension, cls.filename().string()});
      detail::append_counted_tokens(tokenize(text), kDefaultTokenDimension, rec.features);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Encoding

struct EncodeOptions {
  bool grow = false;       // training: extend the vocabulary with unseen strings
  bool normalize = false;  // scale each observation so that sum X_ij = 1
};

namespace detail {

struct CoordChoice {
  Index index;
  double weight;
  double phase;
};

// Cartesian product of per-dimension choices.
template <class Fn>
void for_each_tuple(const std::vector<std::vector<CoordChoice>>& per_dim, Fn&& fn) {
  if (per_dim.empty()) {
    fn(MultiIndex{}, 1.0, 0.0);
    return;
  }
  for (const auto& d : per_dim) {
    if (d.empty()) return;
  }
  std::vector<std::size_t> pos(per_dim.size(), 0);
  std::vector<Index> coords(per_dim.size());
  while (true) {
    double w = 1.0;
    double phase = 0.0;
    for (std::size_t d = 0; d < per_dim.size(); ++d) {
      const auto& c = per_dim[d][pos[d]];
      coords[d] = c.index;
      w *= c.weight;
      phase += c.phase;
    }
    fn(MultiIndex(coords), w, phase);
    std::size_t d = per_dim.size();
    while (d > 0) {
      --d;
      if (++pos[d] < per_dim[d].size()) break;
      pos[d] = 0;
      if (d == 0) return;
    }
  }
}

}  // namespace detail

// Registers every dimension name mentioned by the records, in order of first
// appearance. Fails if a fitted vocabulary would need a new dimension.
inline void register_dimensions(std::span<const RawRecord> records, Vocabulary& vocab, bool allow_new) {
  for (const auto& r : records) {
    for (const auto& l : r.labels) {
      if (vocab.target_dim(l.dimension)) continue;
      if (!allow_new) continue;
      vocab.add_target_dim(l.dimension);
    }
    for (const auto& f : r.features) {
      if (vocab.feature_dim(f.dimension)) continue;
      if (!allow_new) continue;
      vocab.add_feature_dim(f.dimension);
    }
  }
}

inline EncodedObservation encode_record(const RawRecord& rec, Vocabulary& vocab, const EncodeOptions& opts) {
  const std::size_t n_targets = vocab.targets().size();
  const std::size_t n_features = vocab.features().size();
  if (n_targets == 0) throw ShapeError("encode: vocabulary has no target dimension");

  std::vector<std::vector<detail::CoordChoice>> label_choices(n_targets);
  for (const auto& l : rec.labels) {
    auto d = vocab.target_dim(l.dimension);
    if (!d) continue;
    std::optional<Index> k = opts.grow ? std::optional<Index>(vocab.targets()[*d].intern(l.value))
                                       : vocab.targets()[*d].find(l.value);
    if (!k) continue;
    auto& choices = label_choices[*d];
    if (std::none_of(choices.begin(), choices.end(), [&](const auto& c) { return c.index == *k; })) {
      choices.push_back({*k, 1.0, 0.0});
    }
  }

  std::vector<std::vector<detail::CoordChoice>> feature_choices(n_features);
  bool any_phase = false;
  for (const auto& f : rec.features) {
    if (!(f.multiplicity > 0.0)) throw InvalidRecordError("feature multiplicity must be positive");
    auto d = vocab.feature_dim(f.dimension);
    if (!d) continue;
    std::optional<Index> k = opts.grow ? std::optional<Index>(vocab.features()[*d].intern(f.token))
                                       : vocab.features()[*d].find(f.token);
    if (!k) {
      if (n_features == 1) continue;
      k = kUnknownIndex;
    }
    any_phase = any_phase || (f.phase && *f.phase != 0.0);
    auto& choices = feature_choices[*d];
    auto it = std::find_if(choices.begin(), choices.end(), [&](const auto& c) { return c.index == *k; });
    if (it == choices.end() || *k == kUnknownIndex) {
      choices.push_back({*k, f.multiplicity, f.phase.value_or(0.0)});
    } else {
      it->weight += f.multiplicity;
    }
  }

  EncodedObservation obs{SparseCounts(n_targets, n_features), {}, {}, {}};
  detail::for_each_tuple(label_choices, [&](const MultiIndex& i, double w, double) { obs.labels[i] += w; });
  if (opts.grow && obs.labels.empty()) {
    throw InvalidRecordError("training record has no encodable label");
  }
  detail::for_each_tuple(feature_choices, [&](const MultiIndex& j, double w, double phase) {
    if (std::all_of(j.begin(), j.end(), [](Index c) { return c == kUnknownIndex; }) && !j.empty()) return;
    obs.features[j] += w;
    if (any_phase && phase != 0.0) obs.phases[j] = phase;
  });
  if (!obs.features.empty()) {
    for (const auto& [i, wi] : obs.labels) {
      for (const auto& [j, wj] : obs.features) {
        if (!j.has_unknown()) obs.joint.add(i, j, wi * wj);
      }
    }
  }
  if (opts.normalize) {
    if (double t = obs.joint.total_weight(); t > 0.0) obs.joint.scale(1.0 / t);
    if (double t = total_of(obs.features); t > 0.0) {
      for (auto& [_, w] : obs.features) w /= t;
    }
  }
  return obs;
}

inline std::vector<EncodedObservation> encode(std::span<const RawRecord> records, Vocabulary& vocab,
                                              const EncodeOptions& opts) {
  register_dimensions(records, vocab, opts.grow && vocab.targets().empty());
  if (opts.grow && !vocab.targets().empty()) {
    // A fitted vocabulary may grow values but not dimensions.
    for (const auto& r : records) {
      for (const auto& l : r.labels) {
        if (!vocab.target_dim(l.dimension)) throw ShapeError("unknown target dimension '" + l.dimension + "'");
      }
      for (const auto& f : r.features) {
        if (!vocab.feature_dim(f.dimension)) throw ShapeError("unknown feature dimension '" + f.dimension + "'");
      }
    }
  }
  std::vector<EncodedObservation> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_record(r, vocab, opts));
  return out;
}

}  // namespace stc
