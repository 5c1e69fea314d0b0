#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cstte/augment/batch.hpp"
#include "cstte/augment/samplers.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/numcore/adam.hpp"
#include "cstte/pretrain/checkpoint.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::pre {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t n_neg = 2;
  double temperature = 0.07;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 42;
  double learning_rate = 1e-3;
  bool cosine = false;
  aug::AugmentOptions augment;

  void validate() const;  // ConfigError
};

/// Encoder inputs for one split, ids aligned with sequences.
struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<traj::FeatureSequence> seqs;

  std::size_t size() const { return seqs.size(); }
};

FeatureSet make_feature_set(std::span<const traj::Trajectory> trajs,
                            const traj::Normalization& norm);

/// Sub-sequence at the given positions.
traj::FeatureSequence take(const traj::FeatureSequence& seq, std::span<const std::size_t> pos);

struct BatchData {
  aug::ContrastiveBatch batch;
  std::vector<traj::FeatureSequence> inputs;  // queries then positives
  std::size_t skipped = 0;                    // members the sampler rejected
};

/// Augments `members` of `set`. Each trajectory draws from its own stream
/// (seed, epoch, id); negatives from (seed, epoch, batch_index). Returns an
/// empty batch when fewer than n_neg + 1 pairs survive.
BatchData make_batch(const FeatureSet& set, std::span<const std::size_t> members,
                     const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t batch_index);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
  std::size_t skipped = 0;
};

/// One pass over shuffled training data with an Adam step per batch.
/// Returns the pair-weighted mean batch loss.
double train_epoch(enc::Encoder& encoder, num::AdamState& adam, const FeatureSet& train,
                   const TrainConfig& cfg, std::size_t epoch, std::size_t* skipped = nullptr);

/// Mean InfoNCE without gradients. Augmentation is fixed across calls
/// (stream of the global seed) so successive epochs are comparable.
double evaluation_loss(const enc::Encoder& encoder, const FeatureSet& set, const TrainConfig& cfg);

/// Tracks the best validation loss; improvement must be strict.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);
  /// Returns true when `loss` is a new best.
  bool update(std::size_t epoch, double loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t since_best_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains until patience runs out or max_epochs; leaves the encoder at the
/// best epoch's parameters and returns that checkpoint.
FitResult fit(enc::Encoder& encoder, const FeatureSet& train, const FeatureSet& validation,
              const TrainConfig& cfg, const traj::Normalization& norm,
              const EpochCallback& on_epoch = {});

}  // namespace cstte::pre
