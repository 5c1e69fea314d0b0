#include "cstte/encoder/encoder.hpp"

#include <cmath>
#include <string>

#include "cstte/error.hpp"
#include "cstte/numcore/ops.hpp"
#include "cstte/numcore/parallel.hpp"
#include "cstte/numcore/random.hpp"

namespace cstte::enc {

using num::Array;
using num::Shape;
using num::Var;

num::Array frequency_ladder(std::size_t width) {
  Array w({width / 2});
  for (std::size_t i = 0; i < width / 2; ++i) {
    w[i] = 1.0 / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(width));
  }
  return w;
}

num::Array position_encoding(std::size_t n, std::size_t d) {
  Array pe({n, d});
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; 2 * i < d; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
      pe.at(pos, 2 * i) = std::sin(angle);
      if (2 * i + 1 < d) pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

std::vector<std::pair<std::string, num::Shape>> parameter_layout(const EncoderConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t d = c.d_model, h = c.ffn_hidden;
  if (c.use_location) out.push_back({"loc_emb", {c.n_locations, d}});
  if (c.use_time) out.push_back({"psi_t.omega", {c.time_width() / 2}});
  if (c.use_coords) {
    out.push_back({"psi_cx.omega", {c.coord_width() / 2}});
    out.push_back({"psi_cy.omega", {c.coord_width() / 2}});
  }
  for (std::size_t i = 0; i < c.anchors.size(); ++i) {
    const std::string pre = "layer" + std::to_string(i + 1) + ".";
    out.push_back({pre + "anchor", {c.anchors[i], d}});
    for (const char* m : {"q", "k", "v", "o"}) {
      out.push_back({pre + "attn.w" + m, {d, d}});
      out.push_back({pre + "attn.b" + m, {d}});
    }
    out.push_back({pre + "ffn.w1", {d, h}});
    out.push_back({pre + "ffn.b1", {h}});
    out.push_back({pre + "ffn.w2", {h, d}});
    out.push_back({pre + "ffn.b2", {d}});
    for (const char* n : {"norm1", "norm2"}) {
      out.push_back({pre + n + ".gain", {d}});
      out.push_back({pre + n + ".bias", {d}});
    }
  }
  return out;
}

Encoder::Encoder(EncoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  num::Rng rng(seed);
  const double d = static_cast<double>(config_.d_model);
  const double h = static_cast<double>(config_.ffn_hidden);
  for (auto& [name, shape] : parameter_layout(config_)) {
    auto ends_with = [&](std::string_view s) { return name.ends_with(s); };
    Array value;
    if (ends_with(".omega")) {
      value = frequency_ladder(2 * shape[0]);
    } else if (ends_with(".gain")) {
      value = Array(shape, 1.0);
    } else if (ends_with(".bias")) {
      value = Array(shape, 0.0);
    } else {
      // w2/b2 read the FFN hidden layer; everything else reads width d
      const double fan_in = ends_with("ffn.w2") || ends_with("ffn.b2") ? h : d;
      value = num::uniform_array(shape, std::sqrt(1.0 / fan_in), rng);
    }
    params_.add(name, std::move(value));
  }
}

Encoder::Encoder(EncoderConfig config, num::ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_params();
}

void Encoder::check_params() const {
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw ConfigError("encoder expects " + std::to_string(layout.size()) + " parameters, got " +
                      std::to_string(params_.size()));
  }
  for (const auto& [name, shape] : layout) {
    const auto* q = params_.find(name);
    if (!q) throw ConfigError("missing encoder parameter '" + name + "'");
    if (q->value.shape() != shape) {
      throw ConfigError("parameter '" + name + "' has shape " +
                        num::shape_string(q->value.shape()) + ", expected " +
                        num::shape_string(shape));
    }
  }
}

num::Parameter& Encoder::p(const std::string& name) const { return params_.get(name); }

Var Encoder::encode_records(num::Tape& tape, std::span<const traj::FeatureSequence> seqs) const {
  std::size_t total = 0;
  for (const auto& s : seqs) {
    if (s.empty()) throw ContractError("cannot encode an empty sequence");
    total += s.size();
  }
  if (total == 0) throw ContractError("nothing to encode");
  std::vector<std::size_t> locs;
  std::vector<double> ts, cxs, cys;
  locs.reserve(total);
  ts.reserve(total);
  cxs.reserve(total);
  cys.reserve(total);
  for (const auto& s : seqs) {
    for (const auto& r : s) {
      if (config_.use_location && r.loc >= config_.n_locations) {
        throw DataError("location index " + std::to_string(r.loc) + " outside vocabulary of " +
                        std::to_string(config_.n_locations));
      }
      locs.push_back(r.loc);
      ts.push_back(r.t);
      cxs.push_back(r.cx);
      cys.push_back(r.cy);
    }
  }

  Var z;
  auto acc = [&](Var term) { z = z.valid() ? num::add(z, term) : term; };
  if (config_.use_location) acc(num::gather_rows(tape.param(p("loc_emb")), locs));
  if (config_.use_time) acc(num::periodic_encode(tape.param(p("psi_t.omega")), ts));
  if (config_.use_coords) {
    const Var parts[] = {num::periodic_encode(tape.param(p("psi_cx.omega")), cxs),
                         num::periodic_encode(tape.param(p("psi_cy.omega")), cys)};
    acc(num::concat_cols(parts));
  }
  if (config_.use_position) {
    Array pe({total, config_.d_model});
    std::size_t row = 0;
    for (const auto& s : seqs) {
      const Array block = position_encoding(s.size(), config_.d_model);
      std::copy(block.data().begin(), block.data().end(),
                pe.data().begin() + static_cast<std::ptrdiff_t>(row * config_.d_model));
      row += s.size();
    }
    acc(tape.constant(std::move(pe)));
  }
  return z;
}

Var Encoder::induced_layer(num::Tape& tape, std::size_t layer, Var x,
                           std::span<const std::size_t> offsets) const {
  if (layer >= config_.anchors.size()) throw ContractError("layer index out of range");
  if (offsets.size() < 2) throw ContractError("induced layer needs at least one segment");
  const std::string pre = "layer" + std::to_string(layer + 1) + ".";
  auto leaf = [&](const std::string& n) { return tape.param(p(pre + n)); };
  const Var anchor = leaf("anchor");
  const num::AttentionWeights w{leaf("attn.wq"), leaf("attn.bq"), leaf("attn.wk"), leaf("attn.bk"),
                                leaf("attn.wv"), leaf("attn.bv"), leaf("attn.wo"), leaf("attn.bo")};
  const std::size_t segments = offsets.size() - 1;
  const Var att = num::multi_head_attention(anchor, x, x, offsets, config_.heads, w);
  const Var h = num::layer_norm(num::add(num::tile_rows(anchor, segments), att), leaf("norm1.gain"),
                                leaf("norm1.bias"), config_.norm_eps);
  const Var f =
      num::feed_forward(h, leaf("ffn.w1"), leaf("ffn.b1"), leaf("ffn.w2"), leaf("ffn.b2"));
  return num::layer_norm(num::add(h, f), leaf("norm2.gain"), leaf("norm2.bias"), config_.norm_eps);
}

Var Encoder::encode(num::Tape& tape, std::span<const traj::FeatureSequence> seqs) const {
  if (seqs.empty()) throw ContractError("nothing to encode");
  std::vector<std::size_t> offsets{0};
  for (const auto& s : seqs) offsets.push_back(offsets.back() + s.size());
  Var x = encode_records(tape, seqs);
  for (std::size_t l = 0; l < config_.anchors.size(); ++l) {
    x = induced_layer(tape, l, x, offsets);
    for (std::size_t s = 0; s < offsets.size(); ++s) offsets[s] = s * config_.anchors[l];
  }
  return num::reshape(x, {seqs.size(), config_.output_dim()});
}

num::Array Encoder::embed(std::span<const traj::FeatureSequence> seqs, std::size_t chunk) const {
  if (chunk == 0) throw ContractError("chunk size must be positive");
  const std::size_t n = seqs.size(), d_o = config_.output_dim();
  if (n == 0) throw ContractError("nothing to embed");
  Array out({n, d_o});
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  num::parallel_for(n_chunks, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
      num::Tape tape(num::GradMode::inference);
      const Var y = encode(tape, seqs.subspan(lo, hi - lo));
      std::copy(y.value().data().begin(), y.value().data().end(),
                out.data().begin() + static_cast<std::ptrdiff_t>(lo * d_o));
    }
  });
  return out;
}

}  // namespace cstte::enc
