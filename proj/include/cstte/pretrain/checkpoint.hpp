#pragma once

#include <cstddef>
#include <filesystem>

#include "cstte/encoder/config.hpp"
#include "cstte/numcore/adam.hpp"
#include "cstte/numcore/tape.hpp"
#include "cstte/trajdata/trajectory.hpp"
#include "json.hpp"

namespace cstte::pre {

struct Checkpoint {
  enc::EncoderConfig encoder;
  num::ParameterSet params;
  num::AdamState adam;
  traj::Normalization normalization;
  std::size_t epoch = 0;
  double val_loss = 0.0;
  nlohmann::json config;  // snapshot of the run configuration
};

/// `path` gets the CSTTE1 container (parameters, adam.m.*, adam.v.*,
/// meta.*); `path` + ".json" the encoder config and run config snapshot.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cstte::pre
