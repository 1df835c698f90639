// Fits a model on a handful of labelled token records, then predicts and
// explains a new one.

#include <iostream>
#include <sstream>
#include <vector>

#include "stc/stc.hpp"

int main() {
  std::istringstream corpus(R"({"labels": ["sport"], "text": "The pitcher threw a fastball and the batter swung"}
{"labels": ["sport"], "text": "Great game tonight, the team won in extra innings"}
{"labels": ["space"], "text": "The orbiter reached Mars after a long cruise"}
{"labels": ["space"], "text": "Launch of the rocket was delayed by weather"}
)");
  auto records = stc::load_token_records(corpus);

  stc::Vocabulary vocab;
  auto observations = stc::encode(records, vocab, {.grow = true, .normalize = false});
  stc::Model model = stc::Model::fit(observations, vocab);  // h=1, b=1, p=1/2

  auto query_records = std::vector{stc::parse_token_record(R"({"text": "the rocket team won"})")};
  auto query = stc::encode(query_records, vocab, {}).front();

  auto prediction = model.predict(query);
  for (const auto& [target, probability] : prediction.distribution) {
    std::cout << vocab.decode_target(target) << '\t' << probability << '\n';
  }

  std::cout << '\n';
  auto why = stc::explain_local(model, query);
  stc::write_attributions(std::cout, why);
  return 0;
}
