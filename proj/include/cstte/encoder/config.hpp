#pragma once

#include <cstddef>
#include <vector>

namespace cstte::enc {

struct EncoderConfig {
  std::size_t d_model = 64;                // d_L
  std::vector<std::size_t> anchors = {2};  // N_A per layer
  std::size_t heads = 8;
  std::size_t ffn_hidden = 128;
  std::size_t n_locations = 0;  // vocabulary size, from the dataset
  bool use_location = true;
  bool use_time = true;
  bool use_coords = true;
  // fixed sinusoid by record position; only for the no-continuous ablation
  bool use_position = false;
  double norm_eps = 1e-5;

  std::size_t output_dim() const { return anchors.back() * d_model; }
  std::size_t time_width() const { return d_model; }
  std::size_t coord_width() const { return d_model / 2; }

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

}  // namespace cstte::enc
