#pragma once

#include <cstdint>
#include <span>

#include "cstte/encoder/config.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/numcore/array.hpp"
#include "cstte/numcore/tape.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::down {

/// Mean of frozen, randomly initialised record encodings followed by a
/// linear map d_model → out_dim (left at initialisation unless trained).
class MeanBaseline {
 public:
  MeanBaseline(const enc::EncoderConfig& config, std::size_t out_dim, std::uint64_t seed);

  /// Mean record encoding per sequence: [S × d_model].
  num::Array pooled(std::span<const traj::FeatureSequence> seqs) const;
  /// pooled · proj.w + proj.b: [S × out_dim].
  num::Array embed(std::span<const traj::FeatureSequence> seqs) const;

  const num::ParameterSet& projection() const { return projection_; }
  std::size_t out_dim() const { return out_dim_; }

 private:
  enc::Encoder encoder_;
  std::size_t out_dim_;
  num::ParameterSet projection_;
};

}  // namespace cstte::down
