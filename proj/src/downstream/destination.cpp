#include "cstte/downstream/destination.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cstte/error.hpp"
#include "cstte/log.hpp"
#include "cstte/numcore/adam.hpp"
#include "cstte/numcore/ops.hpp"
#include "cstte/numcore/random.hpp"

namespace cstte::down {

using num::Array;
using num::Var;

DestinationData make_destination_data(std::span<const traj::Trajectory> trajs,
                                      std::size_t n_locations) {
  DestinationData d;
  std::size_t skipped = 0;
  for (const auto& t : trajs) {
    if (t.size() < 2) {
      ++skipped;
      continue;
    }
    const auto label = t.records.back().loc;
    if (label >= n_locations) {
      throw DataError("trajectory '" + t.id + "' ends at location " + std::to_string(label) +
                      ", outside vocabulary of " + std::to_string(n_locations));
    }
    traj::Trajectory in{t.id, {t.records.begin(), t.records.end() - 1}};
    d.ids.push_back(t.id);
    d.inputs.push_back(std::move(in));
    d.labels.push_back(label);
  }
  if (skipped > 0) log_warning("destination: skipped " + std::to_string(skipped) + " trajectories");
  return d;
}

LinearProbe::LinearProbe(std::size_t in_dim, std::size_t n_classes,
                         std::optional<std::size_t> proj_dim, std::uint64_t seed)
    : n_classes_(n_classes), projected_(proj_dim.has_value()) {
  if (in_dim == 0 || n_classes == 0 || (proj_dim && *proj_dim == 0)) {
    throw ConfigError("probe dimensions must be positive");
  }
  num::Rng rng(seed);
  std::size_t width = in_dim;
  if (proj_dim) {
    const double bound = std::sqrt(1.0 / static_cast<double>(in_dim));
    params_.add("proj.w", num::uniform_array({in_dim, *proj_dim}, bound, rng));
    params_.add("proj.b", num::uniform_array({*proj_dim}, bound, rng));
    width = *proj_dim;
  }
  const double bound = std::sqrt(1.0 / static_cast<double>(width));
  params_.add("head.w", num::uniform_array({width, n_classes}, bound, rng));
  params_.add("head.b", num::uniform_array({n_classes}, bound, rng));
}

Var LinearProbe::logits(num::Tape& tape, Var x) const {
  if (projected_) {
    x = num::linear(x, tape.param(params_.get("proj.w")), tape.param(params_.get("proj.b")));
  }
  return num::linear(x, tape.param(params_.get("head.w")), tape.param(params_.get("head.b")));
}

Array LinearProbe::logits(const Array& x) const {
  num::Tape tape(num::GradMode::inference);
  return logits(tape, tape.constant(x)).value();
}

namespace {

Array gather(const Array& x, std::span<const std::size_t> rows) {
  Array out({rows.size(), x.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

double top1_accuracy(const Array& logits, std::span<const std::size_t> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += top1(logits.row(i)) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void check_labels(std::span<const std::size_t> y, std::size_t n_classes) {
  for (auto v : y) {
    if (v >= n_classes) {
      throw DataError("label " + std::to_string(v) + " outside " + std::to_string(n_classes) +
                      " classes");
    }
  }
}

}  // namespace

namespace {

// Shared minibatch loop. `batch_loss` records the loss of the given train
// rows; `val_acc` scores the current parameters; `save`/`restore` keep the
// best epoch.
template <class BatchLoss, class ValAcc, class Save, class Restore>
ProbeHistory probe_loop(std::vector<num::Parameter*> params, std::size_t n_train,
                        const ProbeConfig& cfg, BatchLoss batch_loss, ValAcc val_acc, Save save,
                        Restore restore) {
  if (cfg.batch_size == 0 || cfg.patience == 0) {
    throw ConfigError("probe batch size and patience must be positive");
  }
  num::AdamState adam;
  adam.options.learning_rate = cfg.learning_rate;
  ProbeHistory h;
  h.best_val_acc1 = -1.0;
  save();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    num::Rng rng(num::derive_seed(cfg.seed, {epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const auto rows = std::span<const std::size_t>(order).subspan(
          lo, std::min(cfg.batch_size, order.size() - lo));
      num::Tape tape;
      tape.backward(batch_loss(tape, rows));
      num::adam_step(params, adam);
    }
    h.epochs_run = epoch;
    const double acc = val_acc();
    if (acc > h.best_val_acc1) {
      h.best_val_acc1 = acc;
      h.best_epoch = epoch;
      save();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  restore();
  return h;
}

std::vector<std::size_t> pick(std::span<const std::size_t> y, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

ProbeHistory train_probe(LinearProbe& probe, const Array& train_x,
                         std::span<const std::size_t> train_y, const Array& val_x,
                         std::span<const std::size_t> val_y, const ProbeConfig& cfg) {
  if (train_x.rows() != train_y.size() || val_x.rows() != val_y.size()) {
    throw DimensionError("probe inputs and labels disagree in length");
  }
  if (train_y.empty() || val_y.empty()) throw DataError("probe needs training and validation data");
  check_labels(train_y, probe.n_classes());
  check_labels(val_y, probe.n_classes());
  num::ParameterSet best;
  return probe_loop(
      probe.params().pointers(), train_y.size(), cfg,
      [&](num::Tape& tape, std::span<const std::size_t> rows) {
        return num::cross_entropy(probe.logits(tape, tape.constant(gather(train_x, rows))),
                                  pick(train_y, rows));
      },
      [&] { return top1_accuracy(probe.logits(val_x), val_y); }, [&] { best = probe.params(); },
      [&] { probe.params() = best; });
}

ProbeHistory fine_tune_probe(enc::Encoder& encoder, LinearProbe& probe,
                             std::span<const traj::FeatureSequence> train_x,
                             std::span<const std::size_t> train_y,
                             std::span<const traj::FeatureSequence> val_x,
                             std::span<const std::size_t> val_y, const ProbeConfig& cfg) {
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw DimensionError("probe inputs and labels disagree in length");
  }
  if (train_y.empty() || val_y.empty()) throw DataError("probe needs training and validation data");
  check_labels(train_y, probe.n_classes());
  check_labels(val_y, probe.n_classes());
  auto params = encoder.params().pointers();
  for (auto* p : probe.params().pointers()) params.push_back(p);
  num::ParameterSet best_enc, best_probe;
  return probe_loop(
      params, train_y.size(), cfg,
      [&](num::Tape& tape, std::span<const std::size_t> rows) {
        std::vector<traj::FeatureSequence> seqs;
        seqs.reserve(rows.size());
        for (auto r : rows) seqs.push_back(train_x[r]);
        return num::cross_entropy(probe.logits(tape, encoder.encode(tape, seqs)),
                                  pick(train_y, rows));
      },
      [&] { return top1_accuracy(probe.logits(encoder.embed(val_x)), val_y); },
      [&] {
        best_enc = encoder.params();
        best_probe = probe.params();
      },
      [&] {
        encoder.params() = best_enc;
        probe.params() = best_probe;
      });
}

RankingResult destination_eval(const LinearProbe& probe, const Array& x,
                               std::span<const std::size_t> labels) {
  check_labels(labels, probe.n_classes());
  return evaluate_scores(probe.logits(x), labels);
}

double majority_rate(std::span<const std::size_t> labels) {
  if (labels.empty()) return 0.0;
  std::map<std::size_t, std::size_t> freq;
  for (auto l : labels) ++freq[l];
  std::size_t top = 0;
  for (const auto& [l, c] : freq) top = std::max(top, c);
  return static_cast<double>(top) / static_cast<double>(labels.size());
}

}  // namespace cstte::down
