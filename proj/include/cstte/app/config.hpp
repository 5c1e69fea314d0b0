#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cstte/downstream/destination.hpp"
#include "cstte/encoder/config.hpp"
#include "cstte/pretrain/trainer.hpp"
#include "cstte/synthgen/generator.hpp"
#include "cstte/trajdata/preprocess.hpp"
#include "json.hpp"

namespace cstte::app {

struct EvalConfig {
  std::vector<std::string> search = {"cstte", "mean", "dtw"};
  std::vector<std::string> destination = {"cstte", "mean", "markov"};
  down::ProbeConfig probe;
  bool fine_tune = false;  // train the encoder together with the head
};

/// Everything a run needs. Sections mirror the modules; every field has a
/// default so a file may be empty.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string data_input;  // raw trajectory CSV; empty means synthesize
  synth::SynthConfig synth;
  traj::PreprocessOptions preprocess;  // includes vocabulary mode, cell size and box
  enc::EncoderConfig encoder;          // n_locations comes from the dataset
  pre::TrainConfig train;
  EvalConfig eval;
  std::string output_dir;

  /// Copies the global seed into the sections that draw random numbers.
  void apply_seed(std::uint64_t s);
};

/// Strict: unknown keys and wrong value types raise ConfigError naming the
/// key and its line in `text`.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);

}  // namespace cstte::app
