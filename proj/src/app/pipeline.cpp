#include "cstte/app/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cstte/downstream/destination.hpp"
#include "cstte/downstream/dtw.hpp"
#include "cstte/downstream/markov.hpp"
#include "cstte/downstream/mean_baseline.hpp"
#include "cstte/downstream/search.hpp"
#include "cstte/error.hpp"
#include "cstte/numcore/random.hpp"
#include "cstte/synthgen/generator.hpp"
#include "cstte/trajdata/csv.hpp"
#include "cstte/trajdata/metadata.hpp"

namespace cstte::app {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEncoderStream = 0x656e63;  // "enc"
constexpr std::uint64_t kMeanStream = 0x6d65616e;   // "mean"
constexpr std::uint64_t kProbeStream = 0x70726f62;  // "prob"

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

enc::EncoderConfig encoder_config(const RunConfig& cfg, const traj::Dataset& ds) {
  auto e = cfg.encoder;
  e.n_locations = ds.n_locations;
  return e;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

fs::path synthesize(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto ds = synth::generate(cfg.synth);
  const auto raw = out / kRawCsv;
  traj::write_trajectories(raw, ds.trajectories, false);
  synth::write_ground_truth(out / kGroundTruthCsv, ds);
  return raw;
}

traj::Dataset prepare_dataset(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const fs::path input = cfg.data_input.empty() ? out / kRawCsv : fs::path(cfg.data_input);
  if (!fs::exists(input)) {
    throw DataError("input trajectories not found: " + input.string() +
                    (cfg.data_input.empty() ? " (run `synth` first or set data.input)" : ""));
  }
  auto parsed = traj::parse_trajectories(input);
  auto opts = cfg.preprocess;
  if (opts.mode == traj::VocabularyMode::passthrough && !parsed.has_loc_index) {
    throw ConfigError("grid.mode passthrough needs a loc_index column in " + input.string());
  }
  if (opts.mode == traj::VocabularyMode::grid && !opts.box && cfg.data_input.empty()) {
    const auto& y = cfg.synth;
    opts.box = traj::BoundingBox{y.min_lon, y.min_lat, y.max_lon, y.max_lat};
  }
  auto ds = traj::preprocess(std::move(parsed.trajectories), opts);
  traj::save_dataset(out / kDatasetCsv, ds);
  return ds;
}

PretrainResult pretrain(const RunConfig& cfg, const traj::Dataset& ds, const fs::path& out,
                        std::ostream* echo) {
  fs::create_directories(out);
  const auto ecfg = encoder_config(cfg, ds);
  PretrainResult res;
  res.encoder = std::make_unique<enc::Encoder>(ecfg, num::derive_seed(cfg.seed, {kEncoderStream}));

  const auto train = pre::make_feature_set(ds.part(ds.split.train), ds.normalization);
  const auto val = pre::make_feature_set(ds.part(ds.split.validation), ds.normalization);

  std::ofstream log(out / kTrainLog);
  if (!log) throw DataError("cannot write " + (out / kTrainLog).string());
  const std::string header = "epoch,train_loss,val_loss,seconds";
  log << header << '\n';
  if (echo) *echo << header << '\n';
  res.fit = pre::fit(*res.encoder, train, val, cfg.train, ds.normalization,
                     [&](const pre::EpochStats& s) {
                       std::ostringstream line;
                       line << s.epoch << ',' << std::setprecision(10) << s.train_loss << ','
                            << s.val_loss << ',' << fixed(s.seconds, 3);
                       log << line.str() << '\n' << std::flush;
                       if (echo) *echo << line.str() << '\n' << std::flush;
                     });
  res.fit.best.config = to_json(cfg);
  pre::save_checkpoint(out / kCheckpoint, res.fit.best);
  return res;
}

std::unique_ptr<enc::Encoder> load_encoder(const fs::path& checkpoint, traj::Normalization* norm) {
  auto ck = pre::load_checkpoint(checkpoint);
  if (norm) *norm = ck.normalization;
  return std::make_unique<enc::Encoder>(ck.encoder, std::move(ck.params));
}

down::Report evaluate_search(const RunConfig& cfg, const traj::Dataset& ds,
                             const std::string& embedder, const enc::Encoder* encoder) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sets = down::build_search_sets(ds.part(ds.split.test));
  down::RankingResult r;
  if (embedder == "dtw") {
    r = down::dtw_search_eval(sets);
  } else if (embedder == "cstte") {
    if (!encoder) throw ConfigError("search with cstte needs a trained checkpoint");
    r = down::search_eval(
        [&](std::span<const traj::Trajectory> ts) {
          return encoder->embed(pre::make_feature_set(ts, ds.normalization).seqs);
        },
        sets);
  } else if (embedder == "mean") {
    const auto ecfg = encoder_config(cfg, ds);
    const down::MeanBaseline mean(ecfg, ecfg.output_dim(),
                                  num::derive_seed(cfg.seed, {kMeanStream}));
    r = down::search_eval(
        [&](std::span<const traj::Trajectory> ts) {
          return mean.embed(pre::make_feature_set(ts, ds.normalization).seqs);
        },
        sets);
  } else {
    throw ConfigError("unknown search embedder '" + embedder + "'");
  }
  down::Report rep{"search", embedder, r.metrics, seconds_since(t0), {}};
  rep.extras.emplace_back("random_acc1", 1.0 / static_cast<double>(sets.size()));
  return rep;
}

down::Report evaluate_destination(const RunConfig& cfg, const traj::Dataset& ds,
                                  const std::string& predictor, enc::Encoder* encoder) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto train = down::make_destination_data(ds.part(ds.split.train), ds.n_locations);
  const auto val = down::make_destination_data(ds.part(ds.split.validation), ds.n_locations);
  const auto test = down::make_destination_data(ds.part(ds.split.test), ds.n_locations);
  auto features = [&](const down::DestinationData& d) {
    return pre::make_feature_set(d.inputs, ds.normalization).seqs;
  };
  auto probe_cfg = cfg.eval.probe;
  probe_cfg.seed = num::derive_seed(cfg.seed, {kProbeStream});

  down::RankingResult r;
  if (predictor == "markov") {
    down::MarkovChain mc(ds.n_locations);
    mc.fit(ds.part(ds.split.train));
    r = down::markov_destination_eval(mc, test.inputs, test.labels);
  } else if (predictor == "cstte") {
    if (!encoder) throw ConfigError("destination with cstte needs a trained checkpoint");
    down::LinearProbe probe(encoder->config().output_dim(), ds.n_locations, std::nullopt,
                            probe_cfg.seed);
    if (cfg.eval.fine_tune) {
      down::fine_tune_probe(*encoder, probe, features(train), train.labels, features(val),
                            val.labels, probe_cfg);
    } else {
      down::train_probe(probe, encoder->embed(features(train)), train.labels,
                        encoder->embed(features(val)), val.labels, probe_cfg);
    }
    r = down::destination_eval(probe, encoder->embed(features(test)), test.labels);
  } else if (predictor == "mean") {
    const auto ecfg = encoder_config(cfg, ds);
    const down::MeanBaseline mean(ecfg, ecfg.output_dim(),
                                  num::derive_seed(cfg.seed, {kMeanStream}));
    down::LinearProbe probe(ecfg.d_model, ds.n_locations, ecfg.output_dim(), probe_cfg.seed);
    down::train_probe(probe, mean.pooled(features(train)), train.labels, mean.pooled(features(val)),
                      val.labels, probe_cfg);
    r = down::destination_eval(probe, mean.pooled(features(test)), test.labels);
  } else {
    throw ConfigError("unknown destination predictor '" + predictor + "'");
  }
  down::Report rep{"destination", predictor, r.metrics, seconds_since(t0), {}};
  rep.extras.emplace_back("majority_rate", down::majority_rate(test.labels));
  return rep;
}

void save_report(const fs::path& out, const down::Report& r) {
  fs::create_directories(out);
  const std::string stem = r.task + "_" + r.embedder;
  down::write_report(out / (stem + ".txt"), out / (stem + ".kv"), r);
}

void save_config_copy(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream o(out / kConfigCopy);
  if (!o) throw DataError("cannot write " + (out / kConfigCopy).string());
  o << to_json(cfg).dump(2) << '\n';
}

void append_run_log(const fs::path& out, const std::string& line) {
  fs::create_directories(out);
  std::ofstream o(out / kRunLog, std::ios::app);
  o << line << '\n';
}

}  // namespace cstte::app
