#include <gtest/gtest.h>

#include <filesystem>

#include "pjfcann/checkpoint.hpp"
#include "toy.hpp"

using namespace pjfcann;
namespace fs = std::filesystem;

namespace {

struct Saved {
  std::unique_ptr<toy::Setup> setup;
  RunConfig config;
  nlohmann::json json;
};

Saved saved(std::uint64_t seed) {
  Saved s;
  s.config.model = toy::model_config(0.25);
  s.config.similarity = "tfidf";
  s.setup = toy::make(seed, s.config.model);
  s.json = checkpoint_json(*s.setup->model, s.config, s.setup->sim.get());
  return s;
}

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() /
               ("pjfcann-ckpt-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  auto s = saved(1);
  const fs::path dir = temp_dir();
  save_checkpoint(dir / "model.json", *s.setup->model, s.config, s.setup->sim.get());
  EXPECT_FALSE(fs::exists(dir / "model.json.tmp"));
  auto loaded = load_checkpoint(dir / "model.json");
  EXPECT_EQ(nlohmann::json(loaded.config), nlohmann::json(s.config));
  const ParameterStore& a = s.setup->model->parameters();
  const ParameterStore& b = loaded.model->parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].value.data, b[i].value.data);
  for (std::size_t i = 0; i < 5; ++i) {
    PairInput in = s.setup->builder->build(s.setup->pairs[i]);
    EXPECT_EQ(loaded.model->score(in), s.setup->model->score(in));
  }
  ASSERT_TRUE(loaded.similarity);
  EXPECT_EQ(loaded.similarity->to_json(), s.setup->sim->to_json());
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsTampering) {
  auto s = saved(2);
  auto bad = s.json;
  bad["config"]["seed"] = 99;
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  bad["format_version"] = 7;
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  bad["vocabulary"].push_back("zzz");
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  bad["parameters"].erase(0);
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  bad["parameters"][0]["name"] = "nope";
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  auto& p = bad["parameters"][0];
  p["shape"] = {p["data"].size()};
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
  bad = s.json;
  bad.erase("job_ids");
  EXPECT_THROW(checkpoint_from_json(bad), CheckpointError);
}

TEST(Checkpoint, MissingOrCorruptFiles) {
  const fs::path dir = temp_dir();
  EXPECT_THROW(load_checkpoint(dir / "absent.json"), CheckpointError);
  std::ofstream(dir / "broken.json") << "{\"format_version\": 1,";
  EXPECT_THROW(load_checkpoint(dir / "broken.json"), CheckpointError);
  fs::remove_all(dir);
}

TEST(Checkpoint, HexIsSixteenDigits) {
  EXPECT_EQ(hex64(0), "0000000000000000");
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}
