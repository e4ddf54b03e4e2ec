#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsgatr/config.hpp"

namespace tsgatr {
namespace {

std::string usage_message(const std::string& text) {
  try {
    parse_config(text, "run.cfg");
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsAndParse) {
  RunConfig defaults;
  EXPECT_EQ(to_config_text(parse_config("")), to_config_text(defaults));
  auto c = parse_config("# comment\nmodel.d = 16\n\n  loss.gamma2=2.5  # trailing\nmodel.variant = gru_only\n"
                        "eval.aggregation = min\nmodel.knn_symmetric = true\n");
  EXPECT_EQ(c.network.d, 16);
  EXPECT_EQ(c.loss.gamma2, 2.5);
  EXPECT_EQ(c.network.variant, Variant::kGruOnly);
  EXPECT_EQ(c.eval.aggregation, Aggregation::kMin);
  EXPECT_TRUE(c.network.knn_symmetric);
  EXPECT_EQ(c.loss.gamma1, defaults.loss.gamma1);
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig c;
  c.network.d = 12;
  c.loss.xi = 0.30000000000000004;
  c.distance.kind = DistanceKind::kSoft;
  c.eval.protocol = "4vs1/random";
  const auto text = to_config_text(c);
    EXPECT_EQ(to_config_text(parse_config(text)), text);
  for (const auto& key : config_keys()) EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
}

TEST(Config, ErrorsNameSourceAndLine) {
  EXPECT_NE(usage_message("model.d = 4\nmodel.depth = 3\n").find("run.cfg:2"), std::string::npos);
  EXPECT_NE(usage_message("model.depth = 3\n").find("unknown config key"), std::string::npos);
  EXPECT_NE(usage_message("model.d = 4\nmodel.d = 5\n").find("repeated key"), std::string::npos);
  EXPECT_NE(usage_message("model.d = four\n").find("run.cfg:1"), std::string::npos);
  EXPECT_NE(usage_message("model.d\n").find("run.cfg:1"), std::string::npos);
  EXPECT_NE(usage_message("model.knn_symmetric = 2\n"), "");
  EXPECT_NE(usage_message("distance.kind = fuzzy\n"), "");
  EXPECT_THROW(read_config("/nonexistent/run.cfg"), UsageError);
}

TEST(Config, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.train.epochs = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.eval.runs = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.train.adam.beta1 = 1.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Config, HashTracksContent) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.network.k_nn = a.network.k_nn + 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ReadFromFile) {
  auto path = testing::scratch_dir("config") / "run.cfg";
  std::ofstream(path) << "train.epochs = 3\n";
  EXPECT_EQ(read_config(path).train.epochs, 3);
}

}  // namespace
}  // namespace tsgatr
