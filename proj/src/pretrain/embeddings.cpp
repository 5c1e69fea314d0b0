#include "cstte/pretrain/embeddings.hpp"

#include <charconv>
#include <fstream>

#include "cstte/error.hpp"
#include "cstte/numcore/container.hpp"
#include "cstte/pretrain/trainer.hpp"

namespace cstte::pre {

namespace {
constexpr char kMagic[] = "CSTTEE1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;
}  // namespace

EmbeddingTable embed_dataset(const enc::Encoder& encoder, const traj::Normalization& norm,
                             std::span<const traj::Trajectory> trajs) {
  auto set = make_feature_set(trajs, norm);
  return {std::move(set.ids), encoder.embed(set.seqs)};
}

void save_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t d = table.values.cols();
  out << "traj_id";
  for (std::size_t j = 0; j < d; ++j) out << ",e_" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out << table.ids[i];
    for (double v : table.values.row(i)) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void save_embeddings_bin(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, kMagicLen);
  num::write_u64(out, table.ids.size());
  num::write_u64(out, table.values.cols());
  for (const auto& id : table.ids) {
    num::write_u64(out, id.size());
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (double v : table.values.values()) num::write_f64(out, v);
  if (!out) throw DataError("write failed for " + path.string());
}

EmbeddingTable load_embeddings_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::string_view(magic, kMagicLen) != std::string_view(kMagic, kMagicLen)) {
    throw DataError(path.string() + " is not an embedding file");
  }
  const auto n = num::read_u64(in), d = num::read_u64(in);
  if (n == 0 || d == 0 || d > (1U << 20))
    throw DataError("bad embedding header in " + path.string());
  EmbeddingTable t;
  t.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = num::read_u64(in);
    if (len > (1U << 16)) throw DataError("implausible id length in " + path.string());
    std::string id(len, '\0');
    in.read(id.data(), static_cast<std::streamsize>(id.size()));
    t.ids.push_back(std::move(id));
  }
  t.values = num::Array({n, d});
  for (auto& v : t.values.values()) v = num::read_f64(in);
  if (!in) throw DataError("truncated embedding file " + path.string());
  return t;
}

}  // namespace cstte::pre
