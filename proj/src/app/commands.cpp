#include "cstte/app/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cstte/app/config.hpp"
#include "cstte/app/gradcheck_suite.hpp"
#include "cstte/app/pipeline.hpp"
#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"
#include "cstte/pretrain/embeddings.hpp"
#include "cstte/trajdata/metadata.hpp"

namespace cstte::app {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutputRootEnv = "CSTTE_OUTPUT_ROOT";

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  bool deterministic = false;
  std::string checkpoint;
  std::string dataset;
  std::vector<std::string> embedders;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  cfg.apply_seed(o.seed.value_or(cfg.seed));
  if (!o.out.empty()) {
    cfg.output_dir = o.out;
  } else if (cfg.output_dir.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    cfg.output_dir = (fs::path(root && *root ? root : ".") / "cstte-run").string();
  }
  return cfg;
}

fs::path dataset_path(const Options& o, const RunConfig& cfg) {
  return o.dataset.empty() ? fs::path(cfg.output_dir) / kDatasetCsv : fs::path(o.dataset);
}

fs::path checkpoint_path(const Options& o, const RunConfig& cfg) {
  return o.checkpoint.empty() ? fs::path(cfg.output_dir) / kCheckpoint : fs::path(o.checkpoint);
}

traj::Dataset load_processed(const Options& o, const RunConfig& cfg) {
  const auto p = dataset_path(o, cfg);
  if (!fs::exists(p)) throw DataError("dataset not found: " + p.string() + " (run `preprocess`)");
  return traj::load_dataset(p);
}

void print_report(const fs::path& out, const down::Report& r) {
  save_report(out, r);
  std::cout << down::format_report(r) << std::flush;
  append_run_log(out, r.task + " " + r.embedder + " done");
}

bool needs_encoder(const std::vector<std::string>& names) {
  return std::find(names.begin(), names.end(), "cstte") != names.end();
}

int cmd_gradcheck() {
  const auto results = run_gradient_suite();
  bool all = true;
  std::cout << std::left << std::setw(24) << "case" << std::setw(16) << "max_rel_error"
            << std::setw(12) << "tolerance" << "result\n";
  for (const auto& r : results) {
    std::cout << std::left << std::setw(24) << r.name << std::setw(16) << std::scientific
              << std::setprecision(3) << r.max_rel_error << std::setw(12) << r.tolerance
              << (r.pass ? "ok" : "FAIL") << '\n';
    all = all && r.pass;
  }
  std::cout << (all ? "PASS" : "FAIL") << '\n';
  return all ? kExitOk : kExitNumeric;
}

int dispatch(CLI::App& app, const Options& o) {
  const auto sub = app.get_subcommands();
  if (sub.empty()) {
    std::cout << app.help();
    return kExitConfig;
  }
  const std::string name = sub.front()->get_name();
  if (o.deterministic) {
    num::set_thread_count(1);
  } else if (o.threads > 0) {
    num::set_thread_count(o.threads);
  }
  if (name == "gradcheck") return cmd_gradcheck();

  const RunConfig cfg = resolve_config(o);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  save_config_copy(cfg, out);
  append_run_log(out, "command " + name + " seed " + std::to_string(cfg.seed));

  const auto& search = o.embedders.empty() ? cfg.eval.search : o.embedders;
  const auto& dest = o.embedders.empty() ? cfg.eval.destination : o.embedders;

  if (name == "synth") {
    const auto raw = synthesize(cfg, out);
    std::cout << "wrote " << raw.string() << '\n';
  } else if (name == "preprocess") {
    const auto ds = prepare_dataset(cfg, out);
    std::cout << "trajectories: " << ds.trajectories.size() << " (train " << ds.split.train.size()
              << ", validation " << ds.split.validation.size() << ", test " << ds.split.test.size()
              << "), locations: " << ds.n_locations << '\n';
  } else if (name == "pretrain") {
    const auto ds = load_processed(o, cfg);
    const auto res = pretrain(cfg, ds, out, &std::cout);
    append_run_log(out, "best epoch " + std::to_string(res.fit.best.epoch));
  } else if (name == "embed") {
    const auto ds = load_processed(o, cfg);
    traj::Normalization norm;
    const auto encoder = load_encoder(checkpoint_path(o, cfg), &norm);
    const auto table = pre::embed_dataset(*encoder, norm, ds.trajectories);
    pre::save_embeddings_csv(out / "embeddings.csv", table);
    pre::save_embeddings_bin(out / "embeddings.bin", table);
    std::cout << "embedded " << table.ids.size() << " trajectories\n";
  } else if (name == "eval-search") {
    const auto ds = load_processed(o, cfg);
    std::unique_ptr<enc::Encoder> encoder;
    if (needs_encoder(search)) encoder = load_encoder(checkpoint_path(o, cfg));
    for (const auto& e : search) print_report(out, evaluate_search(cfg, ds, e, encoder.get()));
  } else if (name == "eval-dest") {
    const auto ds = load_processed(o, cfg);
    for (const auto& e : dest) {
      // fresh copy each time: fine-tuning mutates the encoder
      std::unique_ptr<enc::Encoder> encoder;
      if (e == "cstte") encoder = load_encoder(checkpoint_path(o, cfg));
      print_report(out, evaluate_destination(cfg, ds, e, encoder.get()));
    }
  } else if (name == "run") {
    if (cfg.data_input.empty()) synthesize(cfg, out);
    const auto ds = prepare_dataset(cfg, out);
    auto res = pretrain(cfg, ds, out, &std::cout);
    for (const auto& e : cfg.eval.search) {
      print_report(out, evaluate_search(cfg, ds, e, res.encoder.get()));
    }
    for (const auto& e : cfg.eval.destination) {
      std::unique_ptr<enc::Encoder> encoder;
      if (e == "cstte") encoder = load_encoder(out / kCheckpoint);
      print_report(out, evaluate_destination(cfg, ds, e, encoder.get()));
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Contrastive spatial-temporal trajectory embedding"};
  app.require_subcommand(0, 1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    s->add_option("-o,--out", o.out,
                  "output directory (default: output.dir, else $" + std::string(kOutputRootEnv) +
                      "/cstte-run)");
    s->add_option("--seed", o.seed, "global seed, overrides the config");
    s->add_option("--threads", o.threads, "cap on worker threads");
    s->add_flag("--deterministic", o.deterministic, "single-threaded numeric paths");
  };
  auto with_dataset = [&](CLI::App* s) {
    s->add_option("--dataset", o.dataset, "processed dataset CSV (default: <out>/dataset.csv)");
  };
  auto with_checkpoint = [&](CLI::App* s) {
    s->add_option("--checkpoint", o.checkpoint, "checkpoint (default: <out>/checkpoint.cstte)");
  };

  common(app.add_subcommand("synth", "generate the synthetic benchmark"));
  common(app.add_subcommand("preprocess", "resample, filter, discretize and split"));
  auto* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pre-training");
  common(pretrain_cmd);
  with_dataset(pretrain_cmd);
  auto* embed = app.add_subcommand("embed", "export embeddings of every trajectory");
  common(embed);
  with_dataset(embed);
  with_checkpoint(embed);
  for (auto [n, help] : {std::pair{"eval-search", "similar trajectory search"},
                         std::pair{"eval-dest", "destination prediction"}}) {
    auto* s = app.add_subcommand(n, help);
    common(s);
    with_dataset(s);
    with_checkpoint(s);
    s->add_option("-e,--embedder", o.embedders, "cstte, mean, dtw or markov (repeatable)");
  }
  common(app.add_subcommand("run",
                            "synth (unless data.input is set), preprocess, pretrain, evaluate"));
  app.add_subcommand("gradcheck", "finite-difference check of every operator")
      ->add_option("--threads", o.threads, "cap on worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return dispatch(app, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace cstte::app
