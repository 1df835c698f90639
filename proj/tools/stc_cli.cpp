// stc: command-line front end.
//
//   stc train        --data zoo.csv --targets class_type --model zoo.json
//   stc predict      --model zoo.json --data queries.csv --top-k 3
//   stc explain      --model zoo.json --kind global --target Mammal
//   stc learn-policy --model m.json --data validation.csv --loss-p 2
//   stc evaluate     --data zoo.csv --targets class_type --runs 100
//
// Errors are reported on stderr as a single line "error: <message>" with a
// nonzero exit status.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stc/stc.hpp"

namespace fs = std::filesystem;

namespace {

struct IngestFlags {
  std::vector<std::string> targets;
  std::vector<std::string> ignore;
  std::string mode = "fold";
  std::string missing = "token";
  std::string delimiter;
  bool normalize = false;

  nlohmann::json to_json() const {
    return {{"targets", targets}, {"ignore", ignore},          {"mode", mode},
            {"missing", missing}, {"delimiter", delimiter},    {"normalize", normalize}};
  }
  void fill_from(const nlohmann::json& j, const CLI::App& app) {
    auto unset = [&](const char* flag) { return app.count(flag) == 0; };
    if (unset("--targets")) targets = j.value("targets", targets);
    if (unset("--ignore")) ignore = j.value("ignore", ignore);
    if (unset("--mode")) mode = j.value("mode", mode);
    if (unset("--missing")) missing = j.value("missing", missing);
    if (unset("--delimiter")) delimiter = j.value("delimiter", delimiter);
    if (unset("--normalize")) normalize = j.value("normalize", normalize);
  }
};

struct Flags {
  std::string data;
  std::string test_data;
  std::string model;
  std::string out;
  std::string save_as;
  IngestFlags ingest;
  double h = 1.0;
  double b = 1.0;
  double p = 0.5;
  std::uint64_t seed = 0;
  std::size_t runs = 100;
  double test_fraction = 0.3;
  std::size_t top_k = 1;
  double loss_p = 2.0;
  std::size_t workers = 0;
  std::vector<std::string> configs;
  std::vector<std::string> target_names;
  std::string kind = "global";
};

bool only_whitespace(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

char delimiter_for(const IngestFlags& f, const std::string& path) {
  if (!f.delimiter.empty()) {
    if (f.delimiter == "\\t" || f.delimiter == "tab") return '\t';
    if (f.delimiter.size() != 1) throw std::invalid_argument("--delimiter must be a single character");
    return f.delimiter[0];
  }
  return fs::path(path).extension() == ".tsv" ? '\t' : ',';
}

// Directory -> one document per file under <label>/; .jsonl/.json -> token
// records; anything else -> delimited table with a header row.
std::vector<stc::RawRecord> load_records(const std::string& path, const IngestFlags& f,
                                         const stc::Vocabulary* model_vocab = nullptr) {
  if (path.empty()) throw std::invalid_argument("--data is required");
  if (fs::is_directory(path)) return stc::load_text_directory(path);
  const std::string text = read_file(path);
  if (only_whitespace(text)) return {};
  const auto ext = fs::path(path).extension();
  std::istringstream in(text);
  if (ext == ".jsonl" || ext == ".json") return stc::load_token_records(in);

  stc::TabularOptions opts;
  opts.delimiter = delimiter_for(f, path);
  opts.ignore_columns = f.ignore;
  opts.target_columns = f.targets;
  if (f.mode == "tensor") opts.mode = stc::TabularMode::kTensor;
  if (f.missing == "drop") opts.missing = stc::MissingPolicy::kDrop;
  if (model_vocab) {
    // Query files may omit the label columns.
    std::istringstream first(text.substr(0, text.find('\n')));
    const auto header = stc::read_delimited(first, opts.delimiter).front();
    std::vector<std::string> present;
    for (const auto& t : opts.target_columns) {
      if (std::find(header.begin(), header.end(), t) != header.end()) present.push_back(t);
    }
    opts.target_columns = present;
    std::vector<std::string> ignored;
    for (const auto& t : opts.ignore_columns) {
      if (std::find(header.begin(), header.end(), t) != header.end()) ignored.push_back(t);
    }
    opts.ignore_columns = ignored;
  } else if (opts.target_columns.empty()) {
    throw std::invalid_argument("--targets is required for tabular data");
  }
  return stc::load_tabular(in, opts);
}

std::size_t workers_of(const Flags& f) { return f.workers == 0 ? stc::default_workers() : f.workers; }

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish(const std::string& path) {
    stream().flush();
    if (!stream()) throw std::runtime_error("error writing " + (path.empty() ? std::string("stdout") : path));
  }

 private:
  std::ofstream file_;
};

nlohmann::json archive_json(const stc::Model& model, const IngestFlags& ingest) {
  auto j = stc::to_json(model);
  j["ingest"] = ingest.to_json();
  return j;
}

void write_archive(const stc::Model& model, const IngestFlags& ingest, const std::string& path) {
  if (path.empty()) throw std::invalid_argument("--model is required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << archive_json(model, ingest).dump() << '\n';
  if (!out) throw std::runtime_error("error writing " + path);
}

struct LoadedModel {
  stc::Model model;
  nlohmann::json ingest;
};

LoadedModel read_archive(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("--model is required");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw stc::ParseError("malformed model archive: " + std::string(e.what()));
  }
  auto ingest = j.value("ingest", nlohmann::json::object());
  return {stc::from_json(j), ingest};
}

stc::Hyperparams hyper_of(const Flags& f) {
  stc::Hyperparams hp{f.h, f.b, f.p};
  hp.validate();
  return hp;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

int cmd_train(Flags& f) {
  auto records = load_records(f.data, f.ingest);
  if (records.empty()) throw std::invalid_argument("empty training set");
  stc::Vocabulary vocab;
  auto obs = stc::encode(records, vocab, {true, f.ingest.normalize});
  auto model = stc::Model::fit(obs, vocab, hyper_of(f));
  write_archive(model, f.ingest, f.model);
  std::size_t features = 0;
  for (const auto& d : vocab.features()) features += d.size();
  std::cout << "records\t" << records.size() << "\nclasses\t" << stc::marginal_over_features(model.corpus()).size()
            << "\nfeatures\t" << features << "\nnonzeros\t" << model.corpus().nnz() << '\n';
  return 0;
}

int cmd_predict(Flags& f, const CLI::App& app) {
  auto [model, ingest] = read_archive(f.model);
  f.ingest.fill_from(ingest, app);
  if (app.count("--h") || app.count("--b") || app.count("--p")) model.set_hyperparams(hyper_of(f));
  auto records = load_records(f.data, f.ingest, &model.vocabulary());
  stc::Vocabulary vocab = model.vocabulary();
  auto queries = stc::encode(records, vocab, {false, f.ingest.normalize});
  model.warm();
  auto preds = stc::predict_batch(model, queries, workers_of(f));

  Output out(f.out);
  auto& os = out.stream();
  os << "record";
  for (std::size_t k = 1; k <= f.top_k; ++k) os << "\tlabel_" << k << "\tprob_" << k;
  os << "\tfallback_depth\tterminal\n";
  os << std::setprecision(17);
  for (std::size_t n = 0; n < preds.size(); ++n) {
    os << n;
    auto ranked = stc::ranked_targets(preds[n], f.top_k);
    for (std::size_t k = 0; k < f.top_k; ++k) {
      if (k < ranked.size()) {
        os << '\t' << vocab.decode_target(ranked[k]) << '\t' << preds[n].probability(ranked[k]);
      } else {
        os << "\t\t";
      }
    }
    os << '\t' << preds[n].fallback_depth << '\t' << (preds[n].terminal ? "yes" : "no") << '\n';
  }
  out.finish(f.out);
  return 0;
}

std::string valid_targets(const stc::Model& model) {
  std::string out;
  for (const auto& [t, _] : stc::marginal_over_features(model.corpus())) {
    if (!out.empty()) out += ", ";
    out += model.vocabulary().decode_target(t);
  }
  return out;
}

int cmd_explain(Flags& f, const CLI::App& app) {
  auto [model, ingest] = read_archive(f.model);
  f.ingest.fill_from(ingest, app);
  if (app.count("--h") || app.count("--b") || app.count("--p")) model.set_hyperparams(hyper_of(f));
  const std::size_t limit = app.count("--top-k") ? f.top_k : 0;
  auto trim = [&](std::vector<stc::FeatureAttribution> v) {
    if (limit && v.size() > limit) v.resize(limit);
    return v;
  };

  Output out(f.out);
  auto& os = out.stream();
  if (f.kind == "global") {
    if (f.target_names.empty()) throw std::invalid_argument("--target is required for global explanations");
    bool header = true;
    for (const auto& name : f.target_names) {
      std::vector<stc::FeatureAttribution> rows;
      try {
        rows = trim(stc::explain_global(model, name));
      } catch (const stc::LookupError&) {
        throw stc::LookupError("unknown target '" + name + "'; valid targets: " + valid_targets(model));
      }
      stc::write_attributions(os, rows, '\t', header);
      header = false;
    }
  } else {
    auto records = f.data.empty() ? std::vector<stc::RawRecord>{} : load_records(f.data, f.ingest, &model.vocabulary());
    stc::Vocabulary vocab = model.vocabulary();
    auto queries = stc::encode(records, vocab, {false, f.ingest.normalize});
    if (f.kind == "local") {
      os << "record\t";
      stc::write_attributions(os, {}, '\t', true);
      for (std::size_t n = 0; n < queries.size(); ++n) {
        std::ostringstream rows;
        stc::write_attributions(rows, trim(stc::explain_local(model, queries[n])), '\t', false);
        std::istringstream lines(rows.str());
        for (std::string line; std::getline(lines, line);) os << n << '\t' << line << '\n';
      }
    } else if (f.kind == "aggregate") {
      auto agg = stc::aggregate_local(model, queries, workers_of(f));
      stc::write_attributions(os, {}, '\t', true);
      for (const auto& [_, rows] : agg) stc::write_attributions(os, trim(rows), '\t', false);
    } else {
      throw std::invalid_argument("--kind must be global, local, or aggregate");
    }
  }
  out.finish(f.out);
  return 0;
}

int cmd_learn_policy(Flags& f, const CLI::App& app) {
  auto [model, ingest] = read_archive(f.model);
  f.ingest.fill_from(ingest, app);
  auto records = load_records(f.data, f.ingest, &model.vocabulary());
  for (const auto& r : records) {
    if (r.labels.empty()) throw stc::InvalidRecordError("validation record without a label");
  }
  stc::Vocabulary vocab = model.vocabulary();
  auto validation = stc::encode(records, vocab, {false, f.ingest.normalize});
  auto result = stc::learn_policy(model, validation, f.loss_p, workers_of(f));
  model.set_policy(result.policy);
  write_archive(model, f.ingest, f.save_as.empty() ? f.model : f.save_as);

  auto report = result.report.to_json(model.feature_dims());
  report["policy"] = result.policy.steps();
  std::vector<std::string> names;
  for (const auto& d : model.vocabulary().features()) names.push_back(d.name());
  report["feature_dimensions"] = names;
  Output out(f.out);
  out.stream() << report.dump(2) << '\n';
  out.finish(f.out);
  return 0;
}

std::vector<stc::NamedConfig> configs_of(const Flags& f) {
  if (f.configs.empty()) {
    auto hp = hyper_of(f);
    return {{"h=" + format_number(hp.h) + ",b=" + format_number(hp.b) + ",p=" + format_number(hp.p), hp}};
  }
  std::vector<stc::NamedConfig> out;
  for (const auto& spec : f.configs) {
    auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0) throw std::invalid_argument("--config expects name:h,b,p");
    stc::Hyperparams hp;
    char c1 = 0, c2 = 0;
    std::istringstream vals(spec.substr(colon + 1));
    if (!(vals >> hp.h >> c1 >> hp.b >> c2 >> hp.p) || c1 != ',' || c2 != ',' || !vals.eof()) {
      throw std::invalid_argument("--config expects name:h,b,p, got '" + spec + "'");
    }
    hp.validate();
    out.push_back({spec.substr(0, colon), hp});
  }
  return out;
}

int cmd_evaluate(Flags& f) {
  auto configs = configs_of(f);
  auto records = load_records(f.data, f.ingest);
  if (records.empty()) throw std::invalid_argument("empty training set");
  Output out(f.out);
  auto& os = out.stream();
  if (!f.test_data.empty()) {
    auto test = load_records(f.test_data, f.ingest);
    if (test.empty()) throw std::invalid_argument("empty test set");
    for (const auto& c : configs) {
      auto r = stc::holdout_experiment(records, test, c.hyper, workers_of(f), f.ingest.normalize);
      stc::write_holdout_table(os, c.name, r);
      os << '\n';
      stc::write_class_table(os, r.report);
      os << '\n';
    }
  } else {
    if (f.runs < 1) throw std::invalid_argument("--runs must be >= 1");
    stc::ExperimentOptions opts;
    opts.runs = f.runs;
    opts.test_fraction = f.test_fraction;
    opts.seed = f.seed;
    opts.workers = workers_of(f);
    opts.normalize = f.ingest.normalize;
    auto r = stc::repeated_split_experiment(records, configs, opts);
    stc::write_summary_table(os, r);
    os << '\n';
    stc::write_pairwise_table(os, r.pairwise);
  }
  out.finish(f.out);
  return 0;
}

void add_ingest(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.data, "Input: delimited file, .jsonl token records, or a <label>/<doc> directory");
  cmd->add_option("--targets", f.ingest.targets, "Label columns of tabular data")->delimiter(',');
  cmd->add_option("--ignore", f.ingest.ignore, "Tabular columns to skip")->delimiter(',');
  cmd->add_option("--mode", f.ingest.mode, "Tabular layout")->check(CLI::IsMember({"fold", "tensor"}));
  cmd->add_option("--missing", f.ingest.missing, "Missing cells")->check(CLI::IsMember({"token", "drop"}));
  cmd->add_option("--delimiter", f.ingest.delimiter, "Field delimiter (default ',' or tab for .tsv)");
  cmd->add_flag("--normalize", f.ingest.normalize, "Scale each observation to total weight 1");
}

void add_hyper(CLI::App* cmd, Flags& f) {
  cmd->add_option("--h", f.h, "Entropy exponent");
  cmd->add_option("--b", f.b, "Balance exponent");
  cmd->add_option("--p", f.p, "Probability amplitude");
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.out, "Output file (default stdout)");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse tensor classifier"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h is taken by the entropy exponent
  Flags f;

  auto* train = app.add_subcommand("train", "Fit a model and write the archive");
  add_ingest(train, f);
  add_hyper(train, f);
  add_common(train, f);
  train->add_option("--model", f.model, "Archive to write")->required();

  auto* predict = app.add_subcommand("predict", "Predict labels for records");
  add_ingest(predict, f);
  add_hyper(predict, f);
  add_common(predict, f);
  predict->add_option("--model", f.model, "Model archive")->required();
  predict->add_option("--top-k", f.top_k, "Labels per record")->check(CLI::PositiveNumber);

  auto* explain = app.add_subcommand("explain", "Global, local, or aggregated feature attributions");
  add_ingest(explain, f);
  add_hyper(explain, f);
  add_common(explain, f);
  explain->add_option("--model", f.model, "Model archive")->required();
  explain->add_option("--kind", f.kind, "Explanation kind")->check(CLI::IsMember({"global", "local", "aggregate"}));
  explain->add_option("--target", f.target_names, "Target name(s) for global explanations");
  explain->add_option("--top-k", f.top_k, "Rows per ranking")->check(CLI::PositiveNumber);

  auto* learn = app.add_subcommand("learn-policy", "Learn the fallback policy on labelled validation data");
  add_ingest(learn, f);
  add_common(learn, f);
  learn->add_option("--model", f.model, "Model archive (updated in place)")->required();
  learn->add_option("--save-as", f.save_as, "Write the updated archive here instead");
  learn->add_option("--loss-p", f.loss_p, "Exponent of the p-norm loss");

  auto* evaluate = app.add_subcommand("evaluate", "Repeated random splits, or a holdout with --test-data");
  add_ingest(evaluate, f);
  add_hyper(evaluate, f);
  add_common(evaluate, f);
  evaluate->add_option("--test-data", f.test_data, "Holdout test set");
  evaluate->add_option("--runs", f.runs, "Number of random splits");
  evaluate->add_option("--test-fraction", f.test_fraction, "Test share of each split");
  evaluate->add_option("--config", f.configs, "Named configuration name:h,b,p (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train) return cmd_train(f);
    if (*predict) return cmd_predict(f, *predict);
    if (*explain) return cmd_explain(f, *explain);
    if (*learn) return cmd_learn_policy(f, *learn);
    if (*evaluate) return cmd_evaluate(f);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}
