#include "cstte/pretrain/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "cstte/encoder/config_json.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/error.hpp"
#include "cstte/numcore/container.hpp"

namespace cstte::pre {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p) {
  auto s = p;
  s += ".json";
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<num::NamedArray> entries;
  for (const auto* p : ckpt.params.pointers()) entries.emplace_back(p->name, p->value);
  for (const auto& [name, m] : ckpt.adam.first_moment) entries.emplace_back("adam.m." + name, m);
  for (const auto& [name, v] : ckpt.adam.second_moment) entries.emplace_back("adam.v." + name, v);
  entries.emplace_back("meta.step", num::Array::scalar(static_cast<double>(ckpt.adam.step_count)));
  entries.emplace_back("meta.epoch", num::Array::scalar(static_cast<double>(ckpt.epoch)));
  entries.emplace_back("meta.val_loss", num::Array::scalar(ckpt.val_loss));
  entries.emplace_back("meta.norm.epoch",
                       num::Array::scalar(static_cast<double>(ckpt.normalization.epoch)));
  entries.emplace_back("meta.norm.seconds_per_unit",
                       num::Array::scalar(ckpt.normalization.seconds_per_unit));
  num::save_container(path, entries);

  nlohmann::json j;
  j["format"] = "cstte-checkpoint-1";
  j["encoder"] = enc::to_json(ckpt.encoder);
  j["adam"] = {{"learning_rate", ckpt.adam.options.learning_rate},
               {"beta1", ckpt.adam.options.beta1},
               {"beta2", ckpt.adam.options.beta2},
               {"epsilon", ckpt.adam.options.epsilon}};
  j["epoch"] = ckpt.epoch;
  if (std::isfinite(ckpt.val_loss)) j["val_loss"] = ckpt.val_loss;
  j["config"] = ckpt.config;
  std::ofstream out(sidecar(path));
  if (!out) throw DataError("cannot write " + sidecar(path).string());
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  std::ifstream in(sidecar(path));
  if (!in) throw DataError("checkpoint sidecar not found: " + sidecar(path).string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint sidecar " + sidecar(path).string() + ": " + e.what());
  }

  Checkpoint c;
  c.encoder = enc::encoder_config_from_json(j.at("encoder"));
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    c.adam.options = {a.at("learning_rate"), a.at("beta1"), a.at("beta2"), a.at("epsilon")};
  }
  if (j.contains("config")) c.config = j["config"];

  auto meta = [&](const num::Array& v) { return v.item(); };
  for (auto& [name, value] : num::load_container(path)) {
    if (name.starts_with("adam.m.")) {
      c.adam.first_moment.emplace(name.substr(7), std::move(value));
    } else if (name.starts_with("adam.v.")) {
      c.adam.second_moment.emplace(name.substr(7), std::move(value));
    } else if (name == "meta.step") {
      c.adam.step_count = static_cast<std::uint64_t>(meta(value));
    } else if (name == "meta.epoch") {
      c.epoch = static_cast<std::size_t>(meta(value));
    } else if (name == "meta.val_loss") {
      c.val_loss = meta(value);
    } else if (name == "meta.norm.epoch") {
      c.normalization.epoch = static_cast<std::int64_t>(meta(value));
    } else if (name == "meta.norm.seconds_per_unit") {
      c.normalization.seconds_per_unit = meta(value);
    } else {
      c.params.add(name, std::move(value));
    }
  }
  // throws if names or shapes disagree with the stored config
  enc::Encoder check(c.encoder, c.params);
  return c;
}

}  // namespace cstte::pre
