#pragma once

// Model persistence as a single JSON document:
//
//   {"format": "stc-model", "version": 1,
//    "hyperparams": {"h": .., "b": .., "p": ..},
//    "vocabulary": {"targets": [{"name": .., "values": [..]}], "features": [..]},
//    "corpus": {"target_dims": n, "feature_dims": m,
//               "targets": [flattened target indices],
//               "features": [flattened feature indices],
//               "weights": [..]},
//    "phases": {same triplet layout, "angles": [..]},   // omitted when empty
//    "policy": [[0, 1], [1], []]}
//
// Doubles are written in shortest round-trip form, so load(save(m)) restores
// every weight bit for bit.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stc/dataset.hpp"
#include "stc/errors.hpp"
#include "stc/model.hpp"
#include "stc/policy.hpp"

namespace stc {

inline constexpr int kArchiveVersion = 1;
inline constexpr const char* kArchiveFormat = "stc-model";

namespace detail {

inline nlohmann::json dims_to_json(const std::vector<Dimension>& dims) {
  auto out = nlohmann::json::array();
  for (const auto& d : dims) out.push_back({{"name", d.name()}, {"values", d.values()}});
  return out;
}

inline std::vector<Dimension> dims_from_json(const nlohmann::json& j) {
  std::vector<Dimension> out;
  for (const auto& d : j) {
    Dimension dim(d.at("name").get<std::string>());
    for (const auto& v : d.at("values")) {
      const auto s = v.get<std::string>();
      if (dim.intern(s) + 1 != dim.size()) throw ParseError("duplicate vocabulary value '" + s + "'");
    }
    out.push_back(std::move(dim));
  }
  return out;
}

inline MultiIndex read_index(const std::vector<Index>& flat, std::size_t entry, std::size_t arity) {
  return MultiIndex(std::vector<Index>(flat.begin() + entry * arity, flat.begin() + (entry + 1) * arity));
}

}  // namespace detail

inline nlohmann::json to_json(const Model& model) {
  nlohmann::json j;
  j["format"] = kArchiveFormat;
  j["version"] = kArchiveVersion;
  const auto& hp = model.hyperparams();
  j["hyperparams"] = {{"h", hp.h}, {"b", hp.b}, {"p", hp.p}};
  j["vocabulary"] = {{"targets", detail::dims_to_json(model.vocabulary().targets())},
                     {"features", detail::dims_to_json(model.vocabulary().features())}};

  const auto& corpus = model.corpus();
  std::vector<Index> targets;
  std::vector<Index> features;
  std::vector<double> weights;
  targets.reserve(corpus.nnz() * corpus.target_dims());
  features.reserve(corpus.nnz() * corpus.feature_dims());
  weights.reserve(corpus.nnz());
  corpus.for_each([&](const MultiIndex& i, const MultiIndex& f, double w) {
    targets.insert(targets.end(), i.begin(), i.end());
    features.insert(features.end(), f.begin(), f.end());
    weights.push_back(w);
  });
  j["corpus"] = {{"target_dims", corpus.target_dims()},
                 {"feature_dims", corpus.feature_dims()},
                 {"targets", std::move(targets)},
                 {"features", std::move(features)},
                 {"weights", std::move(weights)}};

  if (!model.phases().empty()) {
    std::vector<Index> pt;
    std::vector<Index> pf;
    std::vector<double> angles;
    for (const auto& [key, angle] : model.phases().entries()) {
      pt.insert(pt.end(), key.first.begin(), key.first.end());
      pf.insert(pf.end(), key.second.begin(), key.second.end());
      angles.push_back(angle);
    }
    j["phases"] = {{"targets", std::move(pt)}, {"features", std::move(pf)}, {"angles", std::move(angles)}};
  }
  j["policy"] = model.policy().steps();
  return j;
}

inline Model from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string()) != kArchiveFormat) {
      throw ParseError("not an stc-model archive");
    }
    const int version = j.at("version").get<int>();
    if (version != kArchiveVersion) {
      throw ParseError("unsupported archive version " + std::to_string(version) + " (expected " +
                       std::to_string(kArchiveVersion) + ")");
    }
    Hyperparams hp{j.at("hyperparams").at("h").get<double>(), j.at("hyperparams").at("b").get<double>(),
                   j.at("hyperparams").at("p").get<double>()};

    Vocabulary vocab;
    vocab.targets() = detail::dims_from_json(j.at("vocabulary").at("targets"));
    vocab.features() = detail::dims_from_json(j.at("vocabulary").at("features"));

    const auto& c = j.at("corpus");
    const auto td = c.at("target_dims").get<std::size_t>();
    const auto fd = c.at("feature_dims").get<std::size_t>();
    const auto ti = c.at("targets").get<std::vector<Index>>();
    const auto fi = c.at("features").get<std::vector<Index>>();
    const auto w = c.at("weights").get<std::vector<double>>();
    if (ti.size() != w.size() * td || fi.size() != w.size() * fd) throw ParseError("corpus arrays disagree in length");
    SparseCounts corpus(td, fd);
    for (std::size_t e = 0; e < w.size(); ++e) {
      if (!(w[e] > 0.0)) throw ParseError("corpus weights must be positive");
      corpus.add(detail::read_index(ti, e, td), detail::read_index(fi, e, fd), w[e]);
    }

    PhaseTable phases;
    if (j.contains("phases")) {
      const auto& ph = j.at("phases");
      const auto pt = ph.at("targets").get<std::vector<Index>>();
      const auto pf = ph.at("features").get<std::vector<Index>>();
      const auto angles = ph.at("angles").get<std::vector<double>>();
      if (pt.size() != angles.size() * td || pf.size() != angles.size() * fd) {
        throw ParseError("phase arrays disagree in length");
      }
      for (std::size_t e = 0; e < angles.size(); ++e) {
        phases.set(detail::read_index(pt, e, td), detail::read_index(pf, e, fd), angles[e]);
      }
    }
    Policy policy(j.at("policy").get<std::vector<DimSet>>());
    return Model(std::move(vocab), std::move(corpus), hp, std::move(phases), std::move(policy));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed model archive: ") + e.what());
  }
}

inline void save(const Model& model, std::ostream& out) { out << to_json(model).dump() << '\n'; }

inline Model load(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed model archive: ") + e.what());
  }
  return from_json(j);
}

inline void save_file(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save(model, out);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

inline Model load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load(in);
}

}  // namespace stc
