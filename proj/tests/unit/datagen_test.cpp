#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsgatr/alignment.hpp"
#include "tsgatr/datagen.hpp"

namespace tsgatr {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Matrix xy(const RawSignature& raw) { return normalize_signature(raw).coordinates(); }

TEST(Datagen, DeterministicFiles) {
  GenerateOptions opt{.seed = 5, .train_users = 2, .test_users = 1, .samples_per_user = 3};
  auto a = testing::scratch_dir("gen_a"), b = testing::scratch_dir("gen_b");
  auto ma = generate_dataset(a, opt);
  generate_dataset(b, opt);
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  for (const auto& u : ma.users)
    for (const auto& e : u.signatures) ASSERT_EQ(slurp(a / e.path), slurp(b / e.path)) << e.path;

  opt.seed = 6;
  auto c = testing::scratch_dir("gen_c");
  generate_dataset(c, opt);
  EXPECT_NE(slurp(a / ma.users[0].signatures[0].path), slurp(c / ma.users[0].signatures[0].path));
}

TEST(Datagen, LayoutAndManifest) {
  auto dir = testing::scratch_dir("gen_layout");
  auto m = generate_dataset(dir, GenerateOptions{.seed = 1, .train_users = 4, .test_users = 4, .samples_per_user = 10});
  std::size_t csv = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.path().extension() == ".csv") ++csv;
  EXPECT_EQ(csv, 160u);

  auto ds = read_manifest(dir);
  EXPECT_EQ(ds.signatures.size(), 160u);
  EXPECT_EQ(ds.users_in(Split::kTrain).size(), 4u);
  EXPECT_EQ(ds.users_in(Split::kTest).size(), 4u);
  for (const auto& u : ds.users) {
    EXPECT_EQ(u.genuine.size(), 10u);
    EXPECT_EQ(u.skilled.size(), 10u);
  }
  for (const auto& s : ds.signatures) {
    EXPECT_GE(s.signature.points.size(), 100u) << s.sig_id;
    EXPECT_LE(s.signature.points.size(), 400u) << s.sig_id;
  }
  EXPECT_EQ(manifest_to_json(manifest_from_json(manifest_to_json(m), "m")), manifest_to_json(m));
  EXPECT_EQ(ds.manifest_hash, fnv1a64(slurp(dir / "manifest.json")));
}

TEST(Datagen, GenuineCloserThanOtherUsers) {
  auto a = generate_user(make_user_spec(11, 4)), b = generate_user(make_user_spec(12, 4));
  double intra = 0, inter = 0;
  for (int i = 1; i < 4; ++i) {
    intra += dtw_distance(xy(a.genuine[0]), xy(a.genuine[i])).normalized;
    inter += dtw_distance(xy(a.genuine[0]), xy(b.genuine[i])).normalized;
  }
  EXPECT_LT(intra, inter);
  EXPECT_NE(base_trajectory(make_user_spec(11)), base_trajectory(make_user_spec(12)));
}

TEST(Datagen, SignaturesAreValid) {
  auto u = generate_user(make_user_spec(3, 5));
  ASSERT_EQ(u.genuine.size(), 5u);
  ASSERT_EQ(u.skilled.size(), 5u);
  for (const auto* pool : {&u.genuine, &u.skilled})
    for (const auto& s : *pool) EXPECT_NO_THROW(validate_signature(s));
}

TEST(Datagen, CsvRoundTripIsStable) {
  auto u = generate_user(make_user_spec(4, 1));
  std::stringstream first;
  write_signature_csv(first, u.genuine[0]);
  auto back = parse_signature_csv(first, "mem");
  std::stringstream second;
  write_signature_csv(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(Dataset, MissingFileNamesPath) {
  auto dir = testing::scratch_dir("gen_missing");
  auto m = generate_dataset(dir, GenerateOptions{.seed = 2, .train_users = 1, .test_users = 1, .samples_per_user = 2});
  const auto victim = m.users[1].signatures[0].path;
  fs::remove(dir / victim);
  try {
    read_manifest(dir / "manifest.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_manifest(testing::scratch_dir("gen_empty")), Error);
  EXPECT_THROW(manifest_from_json("{\"format\": \"other\"}", "m"), Error);
  EXPECT_THROW(generate_dataset(dir, GenerateOptions{.train_users = 0}), UsageError);
}

}  // namespace
}  // namespace tsgatr
