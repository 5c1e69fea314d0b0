#include "cstte/app/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "cstte/augment/samplers.hpp"
#include "cstte/encoder/config_json.hpp"
#include "cstte/error.hpp"

namespace cstte::app {

using nlohmann::json;

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  train.seed = s;
  eval.probe.seed = s;
}

namespace {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed is read as size_t");

std::size_t line_of(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Line of the first `"key"` followed by a colon; 0 when not found.
std::size_t key_line(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  for (std::size_t pos = text.find(quoted); pos != std::string::npos;
       pos = text.find(quoted, pos + 1)) {
    std::size_t k = pos + quoted.size();
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && text[k] == ':') return line_of(text, pos);
  }
  return 0;
}

class Section {
 public:
  Section(const json& j, std::string path, const std::string& text)
      : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const char* key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const char* key) {
    known_.insert(key);
    return j_.at(key);
  }

  Section sub(const char* key) {
    known_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, qualify(key), text_);
  }

  void get(const char* key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    out = v.get<std::size_t>();
  }
  void get(const char* key, std::int64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    out = v.get<std::int64_t>();
  }
  void get(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
  }
  void get(const char* key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }
  void get(const char* key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected a list of strings");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_string()) fail(key, "expected a list of strings");
      out.push_back(e.get<std::string>());
    }
  }
  std::vector<double> numbers(const char* key, std::size_t count) {
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != count) {
      fail(key, "expected a list of " + std::to_string(count) + " numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected a list of " + std::to_string(count) + " numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const char* key) {
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty list of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) fail(key, "expected a nonempty list of integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  /// Rejects keys nobody asked about.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!known_.contains(k)) fail(k, "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto line = key_line(text_, key);
    throw ConfigError("config: '" + qualify(key) + "': " + what +
                      (line ? " (line " + std::to_string(line) + ")" : std::string()));
  }

 private:
  std::string qualify(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> known_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root =
        text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: malformed JSON at line " + std::to_string(line_of(text, e.byte)) +
                      ": " + e.what());
  }
  RunConfig c;
  Section top(root, "", text);
  std::uint64_t seed = c.seed;
  top.get("seed", seed);
  c.apply_seed(seed);

  {
    auto s = top.sub("data");
    s.get("input", c.data_input);
    s.finish();
  }
  {
    auto s = top.sub("synth");
    auto& y = c.synth;
    s.get("n_trajectories", y.n_trajectories);
    if (s.has("box")) {
      const auto b = s.numbers("box", 4);
      y.min_lon = b[0], y.min_lat = b[1], y.max_lon = b[2], y.max_lat = b[3];
    }
    s.get("n_hubs", y.n_hubs);
    s.get("min_hub_separation_m", y.min_hub_separation_m);
    s.get("min_points", y.min_points);
    s.get("max_points", y.max_points);
    s.get("min_speed", y.min_speed);
    s.get("max_speed", y.max_speed);
    s.get("interval_s", y.interval_s);
    s.get("noise_sigma_m", y.noise_sigma_m);
    s.get("start_epoch", y.start_epoch);
    s.get("span_days", y.span_days);
    s.finish();
  }
  {
    auto s = top.sub("grid");
    std::string mode = "grid";
    s.get("mode", mode);
    if (mode == "grid") {
      c.preprocess.mode = traj::VocabularyMode::grid;
    } else if (mode == "passthrough") {
      c.preprocess.mode = traj::VocabularyMode::passthrough;
    } else {
      s.fail("mode", "expected grid or passthrough");
    }
    s.get("cell_size_m", c.preprocess.cell_size_m);
    c.synth.cell_size_m = c.preprocess.cell_size_m;
    if (s.has("box")) {
      const auto b = s.numbers("box", 4);
      c.preprocess.box = traj::BoundingBox{b[0], b[1], b[2], b[3]};
    }
    s.finish();
  }
  {
    auto s = top.sub("preprocess");
    s.get("interval_s", c.preprocess.interval_s);
    s.get("min_length", c.preprocess.min_length);
    if (s.has("ratios")) {
      const auto r = s.numbers("ratios", 3);
      c.preprocess.ratios = {r[0], r[1], r[2]};
    }
    s.finish();
  }
  {
    auto s = top.sub("encoder");
    auto& e = c.encoder;
    s.get("d_model", e.d_model);
    if (s.has("anchors")) e.anchors = s.counts("anchors");
    s.get("heads", e.heads);
    s.get("ffn_hidden", e.ffn_hidden);
    s.get("use_location", e.use_location);
    s.get("use_time", e.use_time);
    s.get("use_coords", e.use_coords);
    s.get("use_position", e.use_position);
    s.get("norm_eps", e.norm_eps);
    s.finish();
  }
  {
    auto s = top.sub("train");
    auto& t = c.train;
    s.get("batch_size", t.batch_size);
    s.get("n_neg", t.n_neg);
    s.get("temperature", t.temperature);
    s.get("max_epochs", t.max_epochs);
    s.get("patience", t.patience);
    s.get("learning_rate", t.learning_rate);
    s.get("cosine", t.cosine);
    s.finish();
  }
  {
    auto s = top.sub("augment");
    std::string name = aug::to_string(c.train.augment.sampler);
    s.get("augmentation", name);
    try {
      c.train.augment.sampler = aug::parse_sampler(name);
    } catch (const ConfigError& e) {
      s.fail("augmentation", e.what());
    }
    s.get("keep_prob", c.train.augment.keep_prob);
    s.get("max_tries", c.train.augment.max_tries);
    s.finish();
  }
  {
    auto s = top.sub("eval");
    s.get("search", c.eval.search);
    s.get("destination", c.eval.destination);
    s.get("fine_tune", c.eval.fine_tune);
    auto p = s.sub("probe");
    p.get("learning_rate", c.eval.probe.learning_rate);
    p.get("max_epochs", c.eval.probe.max_epochs);
    p.get("patience", c.eval.probe.patience);
    p.get("batch_size", c.eval.probe.batch_size);
    p.finish();
    for (const auto& n : c.eval.search) {
      if (n != "cstte" && n != "mean" && n != "dtw")
        s.fail("search", "unknown embedder '" + n + "'");
    }
    for (const auto& n : c.eval.destination) {
      if (n != "cstte" && n != "mean" && n != "markov") {
        s.fail("destination", "unknown predictor '" + n + "'");
      }
    }
    s.finish();
  }
  {
    auto s = top.sub("output");
    s.get("dir", c.output_dir);
    s.finish();
  }
  top.finish();

  c.train.validate();
  auto probe_check = c.encoder;
  probe_check.n_locations = 1;
  probe_check.validate();
  c.synth.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["data"] = {{"input", c.data_input}};
  const auto& y = c.synth;
  j["synth"] = {{"n_trajectories", y.n_trajectories},
                {"box", {y.min_lon, y.min_lat, y.max_lon, y.max_lat}},
                {"n_hubs", y.n_hubs},
                {"min_hub_separation_m", y.min_hub_separation_m},
                {"min_points", y.min_points},
                {"max_points", y.max_points},
                {"min_speed", y.min_speed},
                {"max_speed", y.max_speed},
                {"interval_s", y.interval_s},
                {"noise_sigma_m", y.noise_sigma_m},
                {"start_epoch", y.start_epoch},
                {"span_days", y.span_days}};
  j["grid"] = {{"mode", c.preprocess.mode == traj::VocabularyMode::grid ? "grid" : "passthrough"},
               {"cell_size_m", c.preprocess.cell_size_m}};
  if (c.preprocess.box) {
    const auto& b = *c.preprocess.box;
    j["grid"]["box"] = {b.min_lon, b.min_lat, b.max_lon, b.max_lat};
  }
  j["preprocess"] = {{"interval_s", c.preprocess.interval_s},
                     {"min_length", c.preprocess.min_length},
                     {"ratios", c.preprocess.ratios}};
  auto e = enc::to_json(c.encoder);
  e.erase("n_locations");
  j["encoder"] = e;
  const auto& t = c.train;
  j["train"] = {
      {"batch_size", t.batch_size}, {"n_neg", t.n_neg},       {"temperature", t.temperature},
      {"max_epochs", t.max_epochs}, {"patience", t.patience}, {"learning_rate", t.learning_rate},
      {"cosine", t.cosine}};
  j["augment"] = {{"augmentation", aug::to_string(t.augment.sampler)},
                  {"keep_prob", t.augment.keep_prob},
                  {"max_tries", t.augment.max_tries}};
  j["eval"] = {{"search", c.eval.search},
               {"destination", c.eval.destination},
               {"fine_tune", c.eval.fine_tune},
               {"probe",
                {{"learning_rate", c.eval.probe.learning_rate},
                 {"max_epochs", c.eval.probe.max_epochs},
                 {"patience", c.eval.probe.patience},
                 {"batch_size", c.eval.probe.batch_size}}}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

}  // namespace cstte::app
