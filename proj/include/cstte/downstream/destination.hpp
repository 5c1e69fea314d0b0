#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cstte/downstream/metrics.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/numcore/array.hpp"
#include "cstte/numcore/tape.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::down {

/// Inputs exclude the last record; the label is its location.
struct DestinationData {
  std::vector<std::string> ids;
  std::vector<traj::Trajectory> inputs;
  std::vector<std::size_t> labels;
};

/// Trajectories with fewer than 2 records are skipped. DataError when a
/// label is outside [0, n_locations).
DestinationData make_destination_data(std::span<const traj::Trajectory> trajs,
                                      std::size_t n_locations);

struct ProbeConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
};

/// Linear classifier, optionally behind a trainable linear projection.
/// Parameters: [proj.w, proj.b,] head.w, head.b.
class LinearProbe {
 public:
  LinearProbe(std::size_t in_dim, std::size_t n_classes, std::optional<std::size_t> proj_dim,
              std::uint64_t seed);

  num::ParameterSet& params() { return params_; }
  const num::ParameterSet& params() const { return params_; }
  std::size_t n_classes() const { return n_classes_; }

  num::Var logits(num::Tape& tape, num::Var x) const;
  num::Array logits(const num::Array& x) const;

 private:
  std::size_t n_classes_;
  bool projected_;
  mutable num::ParameterSet params_;
};

struct ProbeHistory {
  std::size_t best_epoch = 0;
  double best_val_acc1 = 0.0;
  std::size_t epochs_run = 0;
};

/// Cross-entropy with Adam; early-stopped on validation Acc@1 (strict
/// improvement). The probe ends at its best epoch's parameters.
ProbeHistory train_probe(LinearProbe& probe, const num::Array& train_x,
                         std::span<const std::size_t> train_y, const num::Array& val_x,
                         std::span<const std::size_t> val_y, const ProbeConfig& cfg);

/// Trains encoder and probe together on raw sequences (the encoder is not
/// frozen). Same stopping rule as train_probe; both end at the best epoch.
ProbeHistory fine_tune_probe(enc::Encoder& encoder, LinearProbe& probe,
                             std::span<const traj::FeatureSequence> train_x,
                             std::span<const std::size_t> train_y,
                             std::span<const traj::FeatureSequence> val_x,
                             std::span<const std::size_t> val_y, const ProbeConfig& cfg);

RankingResult destination_eval(const LinearProbe& probe, const num::Array& x,
                               std::span<const std::size_t> labels);

/// Frequency of the most common label.
double majority_rate(std::span<const std::size_t> labels);

}  // namespace cstte::down
