// 20 Newsgroups (by-date split) checks. Needs the corpus on disk:
//   $STC_NEWSGROUPS_DIR/{train,test}/<group>/<message>
// or data/20news-bydate/20news-bydate-{train,test}/<group>/<message>.
// Exits 77 (skipped) when neither is present.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "stc/stc.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& what, const std::string& measured) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << id << "  " << what << "  [" << measured << "]" << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::optional<std::pair<fs::path, fs::path>> locate() {
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("STC_NEWSGROUPS_DIR")) roots.emplace_back(env);
  roots.emplace_back(fs::path(STC_DATA_DIR) / "20news-bydate");
  for (const auto& r : roots) {
    if (fs::is_directory(r / "train") && fs::is_directory(r / "test")) return std::pair{r / "train", r / "test"};
    if (fs::is_directory(r / "20news-bydate-train") && fs::is_directory(r / "20news-bydate-test")) {
      return std::pair{r / "20news-bydate-train", r / "20news-bydate-test"};
    }
  }
  return std::nullopt;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

int main() {
  auto dirs = locate();
  if (!dirs) {
    std::cout << "SKIP  8   20 Newsgroups corpus not found (set STC_NEWSGROUPS_DIR)" << std::endl;
    std::cout << "SKIP  9b  20 Newsgroups corpus not found" << std::endl;
    return 77;
  }
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

  auto train = stc::load_text_directory(dirs->first);
  auto test = stc::load_text_directory(dirs->second);
  std::cout << "loaded " << train.size() << " training and " << test.size() << " test messages" << std::endl;

  auto half = stc::holdout_experiment(train, test, stc::Hyperparams::quantum(), workers);
  auto third = stc::holdout_experiment(train, test, stc::Hyperparams{1.0, 1.0, 1.0 / 3.0}, workers);
  std::cout << "p=1/2 train " << fmt("%.1f", half.train_seconds) << "s, predict " << fmt("%.1f", half.predict_seconds)
            << "s" << std::endl;

  const double macro = half.report.macro.f1;
  const double acc = half.report.accuracy;
  const double acc3 = third.report.accuracy;
  report("8", std::abs(macro - 0.856) <= 0.02 && std::abs(acc - 0.864) <= 0.02 && std::abs(acc3 - 0.873) <= 0.02 &&
                  acc3 > acc,
         "p=1/2 macro F1 0.856+-0.02, accuracy 0.864+-0.02; p=1/3 accuracy 0.873+-0.02 and above p=1/2",
         "macro F1 " + fmt("%.4f", macro) + ", accuracy " + fmt("%.4f", acc) + ", p=1/3 accuracy " + fmt("%.4f", acc3));

  stc::Vocabulary vocab;
  auto train_obs = stc::encode(train, vocab, {true, false});
  auto model = stc::Model::fit(train_obs, vocab);
  auto top = stc::explain_global(model, "rec.sport.baseball");
  if (top.size() > 10) top.resize(10);
  const std::set<std::string> listed{"phillies", "pitching", "braves", "alomar", "mets", "players"};
  int hits = 0;
  std::string names;
  for (const auto& a : top) {
    names += (names.empty() ? "" : " ") + a.feature_name;
    hits += listed.count(lower(a.feature_name)) > 0;
  }
  report("9b", hits >= 3, "baseball global top-10 holds at least 3 listed terms",
         std::to_string(hits) + " hits: " + names);

  std::cout << (failures ? "FAILED " + std::to_string(failures) + " criteria" : std::string("ALL PASS")) << std::endl;
  return failures ? 1 : 0;
}
