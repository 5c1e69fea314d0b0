#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cstte/encoder/encoder.hpp"
#include "cstte/numcore/array.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::pre {

struct EmbeddingTable {
  std::vector<std::string> ids;
  num::Array values;  // [n × d_O], row i belongs to ids[i]
};

EmbeddingTable embed_dataset(const enc::Encoder& encoder, const traj::Normalization& norm,
                             std::span<const traj::Trajectory> trajs);

/// CSV `traj_id,e_0,...,e_{d-1}`.
void save_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& table);
/// Binary: "CSTTEE1", u64 n, u64 d, n × (u64 length, id bytes), n·d f64,
/// little-endian.
void save_embeddings_bin(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings_bin(const std::filesystem::path& path);

}  // namespace cstte::pre
