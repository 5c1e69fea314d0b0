#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "cstte/app/config.hpp"
#include "cstte/downstream/report.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/pretrain/checkpoint.hpp"
#include "cstte/pretrain/trainer.hpp"
#include "cstte/trajdata/preprocess.hpp"

namespace cstte::app {

// File names inside a run directory.
inline constexpr const char* kRawCsv = "raw.csv";
inline constexpr const char* kGroundTruthCsv = "ground_truth.csv";
inline constexpr const char* kDatasetCsv = "dataset.csv";
inline constexpr const char* kCheckpoint = "checkpoint.cstte";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kConfigCopy = "config.json";
inline constexpr const char* kRunLog = "run.log";

/// Writes the synthetic raw CSV and ground-truth sidecar into `out`.
/// Returns the raw CSV path.
std::filesystem::path synthesize(const RunConfig& cfg, const std::filesystem::path& out);

/// Reads the raw input (the configured file, else `out`/raw.csv), runs
/// preprocessing and saves `out`/dataset.csv with its metadata.
traj::Dataset prepare_dataset(const RunConfig& cfg, const std::filesystem::path& out);

struct PretrainResult {
  pre::FitResult fit;
  std::unique_ptr<enc::Encoder> encoder;  // at the best epoch
};

/// Contrastive pre-training; writes the checkpoint and the training log.
/// Epoch lines also go to `echo` when given.
PretrainResult pretrain(const RunConfig& cfg, const traj::Dataset& ds,
                        const std::filesystem::path& out, std::ostream* echo = nullptr);

/// `embedder` is cstte, mean or dtw. `encoder` is required for cstte.
down::Report evaluate_search(const RunConfig& cfg, const traj::Dataset& ds,
                             const std::string& embedder, const enc::Encoder* encoder);

/// `predictor` is cstte, mean or markov. `encoder` is required for cstte
/// (and is modified when fine-tuning is on).
down::Report evaluate_destination(const RunConfig& cfg, const traj::Dataset& ds,
                                  const std::string& predictor, enc::Encoder* encoder);

/// Encoder restored from a checkpoint file.
std::unique_ptr<enc::Encoder> load_encoder(const std::filesystem::path& checkpoint,
                                           traj::Normalization* norm = nullptr);

/// Writes `<out>/<task>_<name>.txt` and `.kv`.
void save_report(const std::filesystem::path& out, const down::Report& r);

/// Persists the resolved configuration as `<out>/config.json`.
void save_config_copy(const RunConfig& cfg, const std::filesystem::path& out);

/// Appends one line to `<out>/run.log`.
void append_run_log(const std::filesystem::path& out, const std::string& line);

}  // namespace cstte::app
