#include "cstte/pretrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"
#include "cstte/numcore/random.hpp"
#include "cstte/pretrain/info_nce.hpp"

namespace cstte::pre {

namespace {
constexpr std::uint64_t kShuffleStream = 0x73687566;   // "shuf"
constexpr std::uint64_t kNegativeStream = 0x6e656773;  // "negs"
constexpr std::uint64_t kValidationEpoch = ~0ULL;      // fixed augmentation
}  // namespace

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("train: temperature must be positive");
  if (n_neg == 0) throw ConfigError("train: n_neg must be at least 1");
  if (!aug::enough_negatives(batch_size, n_neg)) {
    throw ConfigError("train: batch_size " + std::to_string(batch_size) +
                      " is too small for n_neg " + std::to_string(n_neg));
  }
  if (patience == 0) throw ConfigError("train: patience must be at least 1");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(augment.keep_prob > 0.0 && augment.keep_prob <= 1.0)) {
    throw ConfigError("augment: keep_prob must be in (0, 1]");
  }
}

FeatureSet make_feature_set(std::span<const traj::Trajectory> trajs,
                            const traj::Normalization& norm) {
  FeatureSet s;
  s.ids.reserve(trajs.size());
  s.seqs.reserve(trajs.size());
  for (const auto& t : trajs) {
    s.ids.push_back(t.id);
    s.seqs.push_back(traj::to_features(t, norm));
  }
  return s;
}

traj::FeatureSequence take(const traj::FeatureSequence& seq, std::span<const std::size_t> pos) {
  traj::FeatureSequence out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(seq.at(p));
  return out;
}

BatchData make_batch(const FeatureSet& set, std::span<const std::size_t> members,
                     const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t batch_index) {
  BatchData out;
  std::vector<aug::SamplePair> pairs;
  for (auto idx : members) {
    num::Rng rng(num::derive_seed(cfg.seed, {epoch, num::hash_string(set.ids[idx])}));
    auto pair = aug::draw_pair(cfg.augment, set.seqs[idx].size(), rng);
    if (!pair) {
      ++out.skipped;
      continue;
    }
    pair->source = idx;
    pairs.push_back(std::move(*pair));
  }
  if (!aug::enough_negatives(pairs.size(), cfg.n_neg)) {
    out.skipped += pairs.size();
    return out;
  }
  num::Rng rng(num::derive_seed(cfg.seed, {epoch, batch_index, kNegativeStream}));
  out.batch = aug::assign_negatives(std::move(pairs), cfg.n_neg, rng);
  const auto& ps = out.batch.pairs;
  out.inputs.reserve(2 * ps.size());
  for (const auto& p : ps) out.inputs.push_back(take(set.seqs[p.source], p.query));
  for (const auto& p : ps) out.inputs.push_back(take(set.seqs[p.source], p.positive));
  return out;
}

double train_epoch(enc::Encoder& encoder, num::AdamState& adam, const FeatureSet& train,
                   const TrainConfig& cfg, std::size_t epoch, std::size_t* skipped) {
  if (train.size() == 0) throw DataError("training split is empty");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  num::Rng shuffle_rng(num::derive_seed(cfg.seed, {epoch, kShuffleStream}));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const auto params = encoder.params().pointers();
  double total = 0.0;
  std::size_t pairs = 0, lost = 0;
  for (std::size_t lo = 0, bi = 0; lo < order.size(); lo += cfg.batch_size, ++bi) {
    const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
    auto data = make_batch(train, std::span(order).subspan(lo, hi - lo), cfg, epoch, bi);
    lost += data.skipped;
    if (data.batch.size() == 0) continue;
    num::Tape tape;
    const auto e = encoder.encode(tape, data.inputs);
    const auto loss = batch_info_nce(e, data.batch, cfg.temperature, cfg.cosine);
    total += loss.value().item() * static_cast<double>(data.batch.size());
    pairs += data.batch.size();
    tape.backward(loss);
    num::adam_step(params, adam);
  }
  if (skipped) *skipped = lost;
  if (pairs == 0) throw DataError("no training batch could be assembled");
  return total / static_cast<double>(pairs);
}

double evaluation_loss(const enc::Encoder& encoder, const FeatureSet& set, const TrainConfig& cfg) {
  if (set.size() == 0) throw DataError("evaluation split is empty");
  const std::size_t n_batches = (set.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<double> sums(n_batches, 0.0);
  std::vector<std::size_t> counts(n_batches, 0);
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  num::parallel_for(n_batches, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t bi = b; bi < e; ++bi) {
      const std::size_t lo = bi * cfg.batch_size, hi = std::min(set.size(), lo + cfg.batch_size);
      auto data = make_batch(set, std::span(all).subspan(lo, hi - lo), cfg, kValidationEpoch, bi);
      if (data.batch.size() == 0) continue;
      num::Tape tape(num::GradMode::inference);
      const auto loss = batch_info_nce(encoder.encode(tape, data.inputs), data.batch,
                                       cfg.temperature, cfg.cosine);
      sums[bi] = loss.value().item() * static_cast<double>(data.batch.size());
      counts[bi] = data.batch.size();
    }
  });
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n_batches; ++i) {
    total += sums[i];
    pairs += counts[i];
  }
  if (pairs == 0) throw DataError("no evaluation batch could be assembled");
  return total / static_cast<double>(pairs);
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("patience must be at least 1");
}

bool EarlyStopper::update(std::size_t epoch, double loss) {
  if (loss < best_) {
    best_ = loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

FitResult fit(enc::Encoder& encoder, const FeatureSet& train, const FeatureSet& validation,
              const TrainConfig& cfg, const traj::Normalization& norm,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (validation.size() == 0) throw DataError("validation split is empty");
  num::AdamState adam;
  adam.options.learning_rate = cfg.learning_rate;
  EarlyStopper stopper(cfg.patience);

  FitResult res;
  res.best = {encoder.config(),
              encoder.params(),
              adam,
              norm,
              0,
              std::numeric_limits<double>::infinity(),
              {}};
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = train_epoch(encoder, adam, train, cfg, epoch, &st.skipped);
    st.val_loss = evaluation_loss(encoder, validation, cfg);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(st);
    if (on_epoch) on_epoch(st);
    if (stopper.update(epoch, st.val_loss)) {
      res.best.params = encoder.params();
      res.best.adam = adam;
      res.best.epoch = epoch;
      res.best.val_loss = st.val_loss;
    }
    if (stopper.should_stop()) break;
  }
  encoder.params() = res.best.params;
  return res;
}

}  // namespace cstte::pre
