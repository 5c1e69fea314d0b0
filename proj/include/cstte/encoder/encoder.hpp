#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cstte/encoder/config.hpp"
#include "cstte/numcore/array.hpp"
#include "cstte/numcore/tape.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::enc {

/// Geometric frequency ladder 1/10000^(2i/width), i < width/2.
num::Array frequency_ladder(std::size_t width);

/// Fixed sinusoid by position: (2i) → sin(pos/10000^(2i/d)), (2i+1) → cos.
num::Array position_encoding(std::size_t n, std::size_t d);

/// Trajectory encoder: per-record spatial-temporal encoding, then stacked
/// induced attentive layers, flattened anchor-major to output_dim().
///
/// Parameters: loc_emb, psi_t.omega, psi_cx.omega, psi_cy.omega and per
/// layer i (1-based) layer{i}.anchor, layer{i}.attn.{wq,bq,wk,bk,wv,bv,wo,bo},
/// layer{i}.ffn.{w1,b1,w2,b2}, layer{i}.norm{1,2}.{gain,bias}. Disabled
/// features carry no parameters.
class Encoder {
 public:
  /// Seeded initialisation.
  Encoder(EncoderConfig config, std::uint64_t seed);
  /// Adopts existing parameters; names and shapes must match the config.
  Encoder(EncoderConfig config, num::ParameterSet params);

  const EncoderConfig& config() const { return config_; }
  num::ParameterSet& params() { return params_; }
  const num::ParameterSet& params() const { return params_; }

  /// Record encodings of all sequences stacked: [Σ n_s × d_model].
  num::Var encode_records(num::Tape& tape, std::span<const traj::FeatureSequence> seqs) const;

  /// One induced attentive layer (0-based index) over S segments of x
  /// delimited by offsets: [S·N_A × d_model].
  num::Var induced_layer(num::Tape& tape, std::size_t layer, num::Var x,
                         std::span<const std::size_t> offsets) const;

  /// Embeddings of all sequences: [S × output_dim()]. Sequences must be
  /// nonempty.
  num::Var encode(num::Tape& tape, std::span<const traj::FeatureSequence> seqs) const;

  /// Frozen-parameter embeddings, evaluated in chunks (in parallel when
  /// threads are enabled). Each row depends only on its own sequence.
  num::Array embed(std::span<const traj::FeatureSequence> seqs, std::size_t chunk = 256) const;

 private:
  num::Parameter& p(const std::string& name) const;
  void check_params() const;

  EncoderConfig config_;
  // tape leaves need non-const access; encoding itself never writes
  mutable num::ParameterSet params_;
};

/// Expected parameter names and shapes for a config, in registration order.
std::vector<std::pair<std::string, num::Shape>> parameter_layout(const EncoderConfig& config);

}  // namespace cstte::enc
