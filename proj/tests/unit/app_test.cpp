#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cstte/app/commands.hpp"
#include "cstte/app/config.hpp"
#include "cstte/app/gradcheck_suite.hpp"
#include "cstte/error.hpp"

using namespace cstte;
using namespace cstte::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "cstte_app_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cstte");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError for: " << text;
  return {};
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.train.temperature, 0.07);
  EXPECT_EQ(c.encoder.d_model, 64u);
  EXPECT_EQ(c.encoder.heads, 8u);
  EXPECT_EQ(c.preprocess.min_length, 20u);
  EXPECT_EQ(c.synth.n_trajectories, 2000u);
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
  const auto msg = expect_config_error("{\n  \"train\": {\n    \"batchsize\": 3\n  }\n}\n");
  EXPECT_NE(msg.find("train.batchsize"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, TypeAndValueErrors) {
  EXPECT_NE(expect_config_error("{\"train\": {\"batch_size\": \"big\"}}").find("train.batch_size"),
            std::string::npos);
  expect_config_error("{\"augment\": {\"augmentation\": \"shuffle\"}}");
  expect_config_error("{\"train\": {\"temperature\": 0}}");
  expect_config_error("{\"encoder\": {\"d_model\": 30}}");
  expect_config_error("{\"eval\": {\"search\": [\"rnn\"]}}");
  const auto msg = expect_config_error("{\n\"seed\": 1,\n\"train\": {,}\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, RoundTrip) {
  const auto c = parse_config(R"({
    "seed": 7,
    "synth": {"n_trajectories": 300, "box": [104.0, 30.6, 104.2, 30.8]},
    "grid": {"cell_size_m": 300},
    "preprocess": {"min_length": 10, "ratios": [7, 2, 1]},
    "encoder": {"d_model": 32, "anchors": [3, 2], "heads": 4, "use_time": false},
    "train": {"max_epochs": 3, "cosine": true},
    "augment": {"augmentation": "overlap"},
    "eval": {"search": ["dtw"], "fine_tune": true, "probe": {"patience": 2}},
    "output": {"dir": "somewhere"}
  })");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.synth.seed, 7u);
  EXPECT_EQ(c.encoder.anchors, (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(c.train.augment.sampler, aug::Sampler::overlap);
  const auto j = to_json(c);
  const auto again = parse_config(j.dump(2));
  EXPECT_EQ(to_json(again), j);
}

TEST(Gradcheck, EverySuitePasses) {
  const auto results = run_gradient_suite();
  EXPECT_GE(results.size(), 25u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.pass) << r.name << " rel " << r.max_rel_error << " tol " << r.tolerance;
  }
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(cli({"frobnicate"}), kExitConfig);
  write(dir / "bad.json", "{\"train\": {\"oops\": 1}}");
  EXPECT_EQ(cli({"synth", "-c", (dir / "bad.json").string(), "-o", dir.string()}), kExitConfig);
  // no dataset yet
  EXPECT_EQ(cli({"pretrain", "-o", (dir / "empty").string()}), kExitData);
}

TEST(Cli, MissingCheckpointNamesPath) {
  const auto dir = scratch("ckpt");
  write(dir / "c.json", R"({"synth": {"n_trajectories": 30}})");
  ASSERT_EQ(cli({"synth", "-c", (dir / "c.json").string(), "-o", dir.string()}), kExitOk);
  ASSERT_EQ(cli({"preprocess", "-c", (dir / "c.json").string(), "-o", dir.string()}), kExitOk);
  testing::internal::CaptureStderr();
  const int code = cli({"eval-search", "-c", (dir / "c.json").string(), "-o", dir.string(), "-e",
                        "cstte", "--checkpoint", (dir / "nope.cstte").string()});
  const auto err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, kExitData);
  EXPECT_NE(err.find("nope.cstte"), std::string::npos) << err;
}

TEST(Cli, DtwSearchOnToySet) {
  const auto dir = scratch("toy");
  // ten trajectories: one test trajectory after the 8:1:1 split, so use a
  // 2:1:7 ratio to leave seven in test
  std::ostringstream raw;
  raw << "traj_id,timestamp,lon,lat\n";
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < 8; ++i)
      raw << "t" << k << ',' << 1000 * k + 60 * i << ',' << 104.0 + 0.002 * k + 0.001 * i << ','
          << 30.6 + 0.0005 * i << '\n';
  write(dir / "raw.csv", raw.str());
  write(dir / "c.json", R"({"preprocess": {"min_length": 4, "ratios": [2, 1, 7]}})");
  const auto cfg = (dir / "c.json").string();
  ASSERT_EQ(cli({"preprocess", "-c", cfg, "-o", dir.string()}), kExitOk);
  testing::internal::CaptureStdout();
  ASSERT_EQ(cli({"eval-search", "-c", cfg, "-o", dir.string(), "-e", "dtw"}), kExitOk);
  testing::internal::GetCapturedStdout();
  const auto kv = slurp(dir / "search_dtw.kv");
  for (const char* key : {"acc1=", "acc5=", "acc10=", "acc20=", "macro_f1="}) {
    EXPECT_NE(kv.find(key), std::string::npos) << key;
  }
  EXPECT_NE(kv.find("queries=7"), std::string::npos) << kv;
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_TRUE(fs::exists(dir / "run.log"));
}

TEST(Cli, PipelineReplayIsBitIdentical) {
  const std::string config = R"({"synth": {"n_trajectories": 150},
    "encoder": {"d_model": 16, "heads": 4, "ffn_hidden": 32},
    "train": {"max_epochs": 2, "batch_size": 16},
    "eval": {"probe": {"max_epochs": 2}}})";
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch("replay" + std::to_string(run));
    write(dir / "c.json", config);
    testing::internal::CaptureStdout();
    ASSERT_EQ(cli({"run", "-c", (dir / "c.json").string(), "-o", (dir / "out").string(),
                   "--deterministic"}),
              kExitOk);
    testing::internal::GetCapturedStdout();
    std::string all;
    for (const char* f : {"search_cstte.kv", "search_mean.kv", "search_dtw.kv",
                          "destination_cstte.kv", "destination_mean.kv", "destination_markov.kv"}) {
      ASSERT_TRUE(fs::exists(dir / "out" / f)) << f;
      all += slurp(dir / "out" / f);
    }
    EXPECT_TRUE(fs::exists(dir / "out" / "checkpoint.cstte"));
    EXPECT_TRUE(fs::exists(dir / "out" / "train_log.csv"));
    if (run == 0)
      first = all;
    else
      EXPECT_EQ(all, first);
  }
}
