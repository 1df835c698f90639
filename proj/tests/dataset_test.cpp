#include "stc/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

using stc::MultiIndex;

namespace {

MultiIndex mi(std::initializer_list<stc::Index> v) { return MultiIndex(std::vector<stc::Index>(v)); }

std::vector<stc::RawRecord> tabular(const std::string& text, stc::TabularOptions opts) {
  std::istringstream in(text);
  return stc::load_tabular(in, opts);
}

stc::TabularOptions targets(std::vector<std::string> cols) {
  stc::TabularOptions o;
  o.target_columns = std::move(cols);
  return o;
}

}  // namespace

TEST(Vocabulary, InternIsBijective) {
  stc::Dimension d("x");
  EXPECT_EQ(d.intern("b"), 0u);
  EXPECT_EQ(d.intern("a"), 1u);
  EXPECT_EQ(d.intern("b"), 0u);
  EXPECT_EQ(d.size(), 2u);
  for (stc::Index k = 0; k < d.size(); ++k) EXPECT_EQ(d.find(d.value(k)), k);
  EXPECT_FALSE(d.find("c").has_value());
}

TEST(Vocabulary, DecodesJoinedNames) {
  stc::Vocabulary v;
  v.add_target_dim("y");
  v.add_feature_dim("a");
  v.add_feature_dim("b");
  v.targets()[0].intern("cat");
  v.features()[0].intern("red");
  v.features()[1].intern("big");
  EXPECT_EQ(v.decode_target(mi({0})), "cat");
  EXPECT_EQ(v.decode_feature(mi({0, 0})), "red|big");
  EXPECT_EQ(v.decode_feature(mi({0, stc::kUnknownIndex})), "red|?");
  std::vector<std::size_t> second{1};
  EXPECT_EQ(v.decode_feature(mi({0}), second), "big");
  std::vector<std::string> cat{"cat"}, dog{"dog"};
  EXPECT_EQ(v.encode_target(cat), mi({0}));
  EXPECT_FALSE(v.encode_target(dog).has_value());
}

TEST(Tabular, FoldModeRow) {
  auto recs = tabular("hair,legs,class\n1,4,Mammal\n", targets({"class"}));
  ASSERT_EQ(recs.size(), 1u);
  ASSERT_EQ(recs[0].labels.size(), 1u);
  EXPECT_EQ(recs[0].labels[0].dimension, "class");
  EXPECT_EQ(recs[0].labels[0].value, "Mammal");
  ASSERT_EQ(recs[0].features.size(), 2u);
  EXPECT_EQ(recs[0].features[0].dimension, "f");
  EXPECT_EQ(recs[0].features[0].token, "hair=1");
  EXPECT_EQ(recs[0].features[1].token, "legs=4");
  EXPECT_EQ(recs[0].features[1].multiplicity, 1.0);
}

TEST(Tabular, TensorModeHasOneDimensionPerColumn) {
  auto opts = targets({"class"});
  opts.mode = stc::TabularMode::kTensor;
  auto recs = tabular("hair,legs,class\n1,4,Mammal\n0,2,Bird\n", opts);
  stc::Vocabulary v;
  auto obs = stc::encode(recs, v, {true, false});
  EXPECT_EQ(v.features().size(), 2u);
  EXPECT_EQ(obs[0].joint.feature_dims(), 2u);
  EXPECT_DOUBLE_EQ(obs[1].joint.weight(mi({1}), mi({1, 1})), 1.0);
}

TEST(Tabular, QuotingAndCrlf) {
  auto recs = tabular("name,class\r\n\"a, \"\"b\"\"\",X\r\n", targets({"class"}));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].features[0].token, "name=a, \"b\"");
}

TEST(Tabular, MissingTargetColumnIsSchemaError) {
  EXPECT_THROW(tabular("a,b\n1,2\n", targets({"class"})), stc::SchemaError);
}

TEST(Tabular, RaggedRowReportsLine) {
  try {
    tabular("a,class\n1,X\n1,2,3\n", targets({"class"}));
    FAIL() << "expected a parse error";
  } catch (const stc::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Tabular, MissingValuesBecomeTokensOrAreDropped) {
  auto recs = tabular("a,b,class\n?,,X\n", targets({"class"}));
  ASSERT_EQ(recs[0].features.size(), 2u);
  EXPECT_EQ(recs[0].features[0].token, "a=NA");
  EXPECT_EQ(recs[0].features[1].token, "b=NA");

  auto drop = targets({"class"});
  drop.missing = stc::MissingPolicy::kDrop;
  EXPECT_TRUE(tabular("a,b,class\n?,,X\n", drop)[0].features.empty());

  drop.mode = stc::TabularMode::kTensor;
  EXPECT_THROW(tabular("a,class\n1,X\n", drop), stc::SchemaError);
}

TEST(Tabular, IgnoredColumnsAreSkipped) {
  auto opts = targets({"class"});
  opts.ignore_columns = {"name"};
  auto recs = tabular("name,a,class\nfoo,1,X\n", opts);
  ASSERT_EQ(recs[0].features.size(), 1u);
  EXPECT_EQ(recs[0].features[0].token, "a=1");
}

TEST(Tabular, ZooHas101RecordsAndSixteenAttributes) {
  std::ifstream in(std::string(STC_DATA_DIR) + "/zoo.csv");
  ASSERT_TRUE(in) << "data/zoo.csv missing";
  auto opts = targets({"class_type"});
  opts.ignore_columns = {"animal_name"};
  auto recs = stc::load_tabular(in, opts);
  ASSERT_EQ(recs.size(), 101u);
  for (const auto& r : recs) EXPECT_EQ(r.features.size(), 16u);
  stc::Vocabulary v;
  auto obs = stc::encode(recs, v, {true, false});
  EXPECT_EQ(v.targets()[0].size(), 7u);
  // 16 attributes, 15 boolean and legs with 6 values.
  EXPECT_LE(v.features()[0].size(), 16u * 6u);
  EXPECT_EQ(v.features()[0].size(), 15u * 2u + 6u);
  double total = 0.0;
  for (const auto& o : obs) total += o.joint.total_weight();
  EXPECT_DOUBLE_EQ(total, 101.0 * 16.0);
}

TEST(TokenRecords, CountsMultiplicities) {
  std::istringstream in(R"({"labels": ["rec.sport.baseball"], "tokens": ["game", "game", "team"]})");
  auto recs = stc::load_token_records(in);
  ASSERT_EQ(recs.size(), 1u);
  ASSERT_EQ(recs[0].labels.size(), 1u);
  EXPECT_EQ(recs[0].labels[0].value, "rec.sport.baseball");
  ASSERT_EQ(recs[0].features.size(), 2u);
  EXPECT_EQ(recs[0].features[0].token, "game");
  EXPECT_EQ(recs[0].features[0].multiplicity, 2.0);
  EXPECT_EQ(recs[0].features[1].token, "team");
  EXPECT_EQ(recs[0].features[1].multiplicity, 1.0);
}

TEST(TokenRecords, AlternativeFieldShapes) {
  std::istringstream in(
      "{\"labels\": \"a\", \"tokens\": {\"w\": 3}}\n"
      "\n"
      "{\"labels\": {\"topic\": [\"x\", \"y\"]}, \"text\": \"Hi, hi\"}\n"
      "{\"labels\": [\"b\"], \"tokens\": []}\n");
  auto recs = stc::load_token_records(in);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].features[0].multiplicity, 3.0);
  EXPECT_EQ(recs[1].labels.size(), 2u);
  EXPECT_EQ(recs[1].labels[1].dimension, "topic");
  ASSERT_EQ(recs[1].features.size(), 3u);  // Hi , hi
  EXPECT_TRUE(recs[2].features.empty());
}

TEST(TokenRecords, MalformedLineReportsLineNumber) {
  std::istringstream in("{\"labels\": [\"a\"], \"tokens\": [\"w\"]}\n{not json}\n");
  try {
    stc::load_token_records(in);
    FAIL() << "expected a parse error";
  } catch (const stc::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(TokenRecords, PhasesAttachToTokens) {
  auto rec = stc::parse_token_record(R"({"labels": ["a"], "tokens": ["w", "x"], "phases": {"x": 0.5}})");
  EXPECT_FALSE(rec.features[0].phase.has_value());
  EXPECT_EQ(rec.features[1].phase, 0.5);
}

TEST(TextDirectory, ReadsOneRecordPerFile) {
  namespace fs = std::filesystem;
  auto root = fs::temp_directory_path() / "stc_text_dir_test";
  fs::remove_all(root);
  fs::create_directories(root / "b");
  fs::create_directories(root / "a");
  std::ofstream(root / "b" / "1.txt") << "Go team, go!";
  std::ofstream(root / "a" / "2.txt") << "Hello";
  auto recs = stc::load_text_directory(root);
  fs::remove_all(root);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].labels[0].value, "a");
  EXPECT_EQ(recs[1].labels[0].value, "b");
  ASSERT_EQ(recs[1].features.size(), 5u);  // Go team , go !
}

TEST(Encode, NormalizeDividesByTotal) {
  stc::RawRecord r{{{"label", "t"}}, {{"token", "a", 2.0, {}}, {"token", "b", 1.0, {}}}};
  stc::Vocabulary v;
  auto obs = stc::encode(std::vector<stc::RawRecord>{r}, v, {true, true});
  EXPECT_DOUBLE_EQ(obs[0].joint.weight(mi({0}), mi({0})), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(obs[0].joint.weight(mi({0}), mi({1})), 1.0 / 3.0);
  EXPECT_NEAR(obs[0].joint.total_weight(), 1.0, 1e-12);
}

TEST(Encode, PredictionModeDropsUnseenTokens) {
  stc::Vocabulary v;
  stc::encode(std::vector<stc::RawRecord>{{{{"label", "t"}}, {{"token", "a", 1.0, {}}}}}, v, {true, false});
  auto q = stc::encode(std::vector<stc::RawRecord>{{{}, {{"token", "a", 1.0, {}}, {"token", "zzz", 4.0, {}}}}}, v,
                       {false, false});
  EXPECT_EQ(q[0].features.size(), 1u);
  EXPECT_DOUBLE_EQ(q[0].features.at(mi({0})), 1.0);
  EXPECT_EQ(v.features()[0].size(), 1u);
}

TEST(Encode, MultilabelRecordHasOneEntryPerLabel) {
  stc::RawRecord r{{{"label", "x"}, {"label", "y"}}, {{"token", "w", 1.0, {}}}};
  stc::Vocabulary v;
  auto obs = stc::encode(std::vector<stc::RawRecord>{r}, v, {true, false});
  EXPECT_EQ(obs[0].joint.nnz(), 2u);
  EXPECT_DOUBLE_EQ(obs[0].joint.weight(mi({0}), mi({0})), 1.0);
  EXPECT_DOUBLE_EQ(obs[0].joint.weight(mi({1}), mi({0})), 1.0);
}

TEST(Encode, TrainingRecordWithoutLabelIsRejected) {
  stc::Vocabulary v;
  stc::RawRecord labelled{{{"label", "x"}}, {{"token", "w", 1.0, {}}}};
  stc::RawRecord unlabelled{{}, {{"token", "w", 1.0, {}}}};
  EXPECT_THROW(stc::encode(std::vector<stc::RawRecord>{labelled, unlabelled}, v, {true, false}),
               stc::InvalidRecordError);
}

TEST(Encode, PartiallyUnknownTensorTupleKeepsKnownCoordinates) {
  stc::Vocabulary v;
  stc::RawRecord train{{{"y", "t"}}, {{"a", "1", 1.0, {}}, {"b", "1", 1.0, {}}}};
  stc::encode(std::vector<stc::RawRecord>{train}, v, {true, false});
  stc::RawRecord half{{}, {{"a", "1", 1.0, {}}, {"b", "new", 1.0, {}}}};
  stc::RawRecord none{{}, {{"a", "new", 1.0, {}}, {"b", "new", 1.0, {}}}};
  auto q = stc::encode(std::vector<stc::RawRecord>{half, none}, v, {false, false});
  ASSERT_EQ(q[0].features.size(), 1u);
  EXPECT_EQ(q[0].features.begin()->first, mi({0, stc::kUnknownIndex}));
  EXPECT_TRUE(q[0].joint.empty());
  EXPECT_TRUE(q[1].features.empty());
}

TEST(Encode, IsDeterministic) {
  std::string text = "a,b,class\n1,x,P\n2,y,Q\n1,y,P\n";
  auto r1 = tabular(text, targets({"class"}));
  auto r2 = tabular(text, targets({"class"}));
  stc::Vocabulary v1, v2;
  auto o1 = stc::encode(r1, v1, {true, false});
  auto o2 = stc::encode(r2, v2, {true, false});
  EXPECT_TRUE(v1 == v2);
  ASSERT_EQ(o1.size(), o2.size());
  for (std::size_t k = 0; k < o1.size(); ++k) {
    EXPECT_TRUE(o1[k].joint == o2[k].joint);
    EXPECT_EQ(o1[k].features, o2[k].features);
  }
}

TEST(Encode, FittedVocabularyCannotGainDimensions) {
  stc::Vocabulary v;
  stc::encode(std::vector<stc::RawRecord>{{{{"y", "t"}}, {{"a", "1", 1.0, {}}}}}, v, {true, false});
  EXPECT_THROW(stc::encode(std::vector<stc::RawRecord>{{{{"y", "t"}}, {{"b", "1", 1.0, {}}}}}, v, {true, false}),
               stc::ShapeError);
}
