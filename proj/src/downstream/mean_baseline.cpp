#include "cstte/downstream/mean_baseline.hpp"

#include <cmath>

#include "cstte/error.hpp"
#include "cstte/numcore/random.hpp"

namespace cstte::down {

MeanBaseline::MeanBaseline(const enc::EncoderConfig& config, std::size_t out_dim,
                           std::uint64_t seed)
    : encoder_(config, seed), out_dim_(out_dim) {
  if (out_dim == 0) throw ConfigError("mean baseline output width must be positive");
  num::Rng rng(num::derive_seed(seed, {0x70726f6a}));
  const std::size_t d = config.d_model;
  const double bound = std::sqrt(1.0 / static_cast<double>(d));
  projection_.add("proj.w", num::uniform_array({d, out_dim}, bound, rng));
  projection_.add("proj.b", num::uniform_array({out_dim}, bound, rng));
}

num::Array MeanBaseline::pooled(std::span<const traj::FeatureSequence> seqs) const {
  const std::size_t d = encoder_.config().d_model;
  num::Tape tape(num::GradMode::inference);
  const auto z = encoder_.encode_records(tape, seqs).value();
  num::Array out({seqs.size(), d});
  std::size_t row = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    auto dst = out.row(s);
    for (std::size_t i = 0; i < seqs[s].size(); ++i, ++row) {
      const auto src = z.row(row);
      for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
    }
    for (auto& v : dst) v /= static_cast<double>(seqs[s].size());
  }
  return out;
}

num::Array MeanBaseline::embed(std::span<const traj::FeatureSequence> seqs) const {
  const auto x = pooled(seqs);
  const auto& w = projection_.get("proj.w").value;
  const auto& b = projection_.get("proj.b").value;
  num::Array out({x.rows(), out_dim_});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < out_dim_; ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < x.cols(); ++k) s += x.at(i, k) * w.at(k, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

}  // namespace cstte::down
