#include "cstte/downstream/markov.hpp"

#include <numeric>

#include "cstte/error.hpp"

namespace cstte::down {

namespace {
std::uint64_t key(std::uint32_t from, std::uint32_t to) {
  return (static_cast<std::uint64_t>(from) << 32) | to;
}
}  // namespace

MarkovChain::MarkovChain(std::size_t n_locations) : n_(n_locations), totals_(n_locations, 0) {
  if (n_locations == 0) throw ConfigError("Markov chain needs a nonempty vocabulary");
}

void MarkovChain::fit(std::span<const traj::Trajectory> trajs) {
  for (const auto& t : trajs) {
    for (std::size_t i = 1; i < t.size(); ++i) {
      const auto a = t.records[i - 1].loc, b = t.records[i].loc;
      if (a >= n_ || b >= n_) throw DataError("location outside vocabulary in '" + t.id + "'");
      ++counts_[key(a, b)];
      ++totals_[a];
    }
  }
}

std::uint64_t MarkovChain::count(std::uint32_t from, std::uint32_t to) const {
  auto it = counts_.find(key(from, to));
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t MarkovChain::total(std::uint32_t from) const {
  if (from >= n_) throw ContractError("location outside vocabulary");
  return totals_[from];
}

double MarkovChain::probability(std::uint32_t from, std::uint32_t to) const {
  if (to >= n_) throw ContractError("location outside vocabulary");
  return static_cast<double>(count(from, to) + 1) / static_cast<double>(total(from) + n_);
}

std::vector<double> MarkovChain::distribution(std::uint32_t from) const {
  std::vector<double> p(n_);
  for (std::size_t j = 0; j < n_; ++j) p[j] = probability(from, static_cast<std::uint32_t>(j));
  return p;
}

std::vector<std::size_t> MarkovChain::rank(std::uint32_t from) const {
  return ranking(distribution(from));
}

RankingResult markov_destination_eval(const MarkovChain& mc,
                                      std::span<const traj::Trajectory> inputs,
                                      std::span<const std::size_t> labels) {
  if (inputs.size() != labels.size()) throw DimensionError("inputs and labels disagree");
  RankingResult r;
  r.truth.assign(labels.begin(), labels.end());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].records.empty()) throw DataError("empty input trajectory '" + inputs[i].id + "'");
    if (labels[i] >= mc.n_locations()) throw DataError("label outside vocabulary");
    const auto p = mc.distribution(inputs[i].records.back().loc);
    r.ranks.push_back(rank_of(p, labels[i]));
    r.top1.push_back(top1(p));
  }
  r.metrics = summarize(r.ranks, r.truth, r.top1);
  return r;
}

}  // namespace cstte::down
