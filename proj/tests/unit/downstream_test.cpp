#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "cstte/downstream/destination.hpp"
#include "cstte/downstream/dtw.hpp"
#include "cstte/downstream/markov.hpp"
#include "cstte/downstream/mean_baseline.hpp"
#include "cstte/downstream/metrics.hpp"
#include "cstte/downstream/report.hpp"
#include "cstte/downstream/search.hpp"
#include "cstte/error.hpp"
#include "oracle/dtw.hpp"
#include "oracle/metrics.hpp"

using namespace cstte;
using namespace cstte::down;
using num::Array;

namespace {

traj::Trajectory path_of(std::string id, const std::vector<std::uint32_t>& locs) {
  traj::Trajectory t{std::move(id), {}};
  for (std::size_t i = 0; i < locs.size(); ++i) {
    t.records.push_back(
        {locs[i], static_cast<std::int64_t>(60 * i), 104.0 + 0.001 * locs[i], 30.6 + 0.0007 * i});
  }
  return t;
}

std::vector<Point> random_points(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

oracle::Path2 as_pairs(const std::vector<Point>& p) {
  oracle::Path2 out;
  for (const auto& q : p) out.push_back({q.x, q.y});
  return out;
}

}  // namespace

TEST(Metrics, FourQueryHandCount) {
  const std::vector<std::size_t> ranks{1, 3, 7, 25};
  EXPECT_EQ(accuracy_at(ranks, 1), 0.25);
  EXPECT_EQ(accuracy_at(ranks, 5), 0.5);
  EXPECT_EQ(accuracy_at(ranks, 10), 0.75);
  EXPECT_EQ(accuracy_at(ranks, 20), 0.75);
}

TEST(Metrics, TwoClassMacroF1) {
  const std::vector<std::size_t> truth{0, 0, 1, 1}, pred{0, 0, 0, 0};
  EXPECT_NEAR(macro_f1(truth, pred), (2.0 / 3.0 + 0.0) / 2.0, 1e-15);
}

TEST(Metrics, RankTiesByIndex) {
  const std::vector<double> s{0.5, 0.9, 0.9, 0.1};
  EXPECT_EQ(rank_of(s, 1), 1u);
  EXPECT_EQ(rank_of(s, 2), 2u);
  EXPECT_EQ(rank_of(s, 0), 3u);
  EXPECT_EQ(top1(s), 1u);
  EXPECT_EQ(ranking(s), (std::vector<std::size_t>{1, 2, 0, 3}));
}

TEST(Metrics, MatchOracleOnRandomTables) {
  std::mt19937_64 rng(1);
  for (int table = 0; table < 100; ++table) {
    const std::size_t q = 5 + rng() % 60, c = 2 + rng() % 40;
    Array scores({q, c});
    // coarse values so ties happen
    for (auto& v : scores.values()) v = static_cast<double>(rng() % 7);
    std::vector<std::size_t> truth(q);
    for (auto& t : truth) t = rng() % c;
    const auto r = evaluate_scores(scores, truth);
    std::vector<std::size_t> ranks, pred;
    for (std::size_t i = 0; i < q; ++i) {
      const std::vector<double> row(scores.row(i).begin(), scores.row(i).end());
      ranks.push_back(oracle::rank_by_count(row, truth[i]));
      pred.push_back(oracle::argmax_first(row));
    }
    ASSERT_EQ(r.ranks, ranks);
    ASSERT_EQ(r.top1, pred);
    EXPECT_EQ(r.metrics.acc1, oracle::hit_rate(ranks, 1));
    EXPECT_EQ(r.metrics.acc5, oracle::hit_rate(ranks, 5));
    EXPECT_EQ(r.metrics.acc10, oracle::hit_rate(ranks, 10));
    EXPECT_EQ(r.metrics.acc20, oracle::hit_rate(ranks, 20));
    EXPECT_NEAR(r.metrics.macro_f1, oracle::macro_f1(truth, pred), 1e-14);  // summation order
    EXPECT_LE(r.metrics.acc1, r.metrics.acc5);
    EXPECT_LE(r.metrics.acc10, r.metrics.acc20);
  }
}

TEST(Search, SetsUseOddEvenPositions) {
  const auto t = path_of("a", {1, 2, 3, 4, 5});
  const auto sets =
      build_search_sets(std::vector<traj::Trajectory>{t, path_of("short", {1, 2, 3})});
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets.odd[0].size(), 3u);
  EXPECT_EQ(sets.odd[0].records[2].loc, 5u);
  EXPECT_EQ(sets.even[0].records[1].loc, 4u);
}

TEST(Search, PerfectOneHotOracle) {
  std::vector<traj::Trajectory> test;
  for (std::uint32_t k = 0; k < 8; ++k)
    test.push_back(path_of("t" + std::to_string(k), {k, k, k, k, k}));
  const auto sets = build_search_sets(test);
  const auto r = search_eval(
      [](std::span<const traj::Trajectory> ts) {
        Array e({ts.size(), 8}, 0.0);
        for (std::size_t i = 0; i < ts.size(); ++i) e.at(i, ts[i].records[0].loc) = 1.0;
        return e;
      },
      sets);
  EXPECT_EQ(r.metrics.acc1, 1.0);
  EXPECT_EQ(r.metrics.macro_f1, 1.0);
  EXPECT_EQ(r.metrics.queries, 8u);
}

TEST(Search, FailingEmbedderNamesTrajectory) {
  std::vector<traj::Trajectory> test{path_of("good", {1, 2, 3, 4}), path_of("bad", {9, 2, 3, 4})};
  const auto sets = build_search_sets(test);
  try {
    search_eval(
        [](std::span<const traj::Trajectory> ts) {
          for (const auto& t : ts)
            if (t.records[0].loc == 9) throw DataError("boom");
          return Array({ts.size(), 2}, 1.0);
        },
        sets);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos) << e.what();
  }
}

TEST(Search, RandomEmbeddingsAreAtChance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t m = 20, trials = 400;
  double hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Array q({m, 4}), c({m, 4});
    for (auto& v : q.values()) v = g(rng);
    for (auto& v : c.values()) v = g(rng);
    hits += search_eval(q, c).metrics.acc1 * m;
  }
  const double n = trials * m, p = 1.0 / m;
  EXPECT_NEAR(hits / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
  EXPECT_THROW(search_eval(Array({1, 2}, 1.0), Array({1, 2}, 1.0)), DataError);
}

TEST(Dtw, HandCases) {
  const std::vector<Point> a{{0, 0}}, b{{3, 4}};
  EXPECT_EQ(dtw_distance(a, b), 5.0);
  std::mt19937_64 rng(3);
  const auto p = random_points(7, rng);
  EXPECT_EQ(dtw_distance(p, p), 0.0);
  EXPECT_THROW(dtw_distance({}, p), ContractError);
}

TEST(Dtw, MatchesExhaustiveAlignment) {
  std::mt19937_64 rng(4);
  for (int pair = 0; pair < 200; ++pair) {
    const auto a = random_points(1 + rng() % 6, rng), b = random_points(1 + rng() % 6, rng);
    ASSERT_EQ(dtw_distance(a, b), oracle::dtw_enumerate(as_pairs(a), as_pairs(b))) << pair;
  }
}

TEST(Dtw, SymmetricAndTranslationInvariant) {
  std::mt19937_64 rng(5);
  for (int pair = 0; pair < 50; ++pair) {
    auto a = random_points(2 + rng() % 10, rng), b = random_points(2 + rng() % 10, rng);
    const double d = dtw_distance(a, b);
    EXPECT_NEAR(dtw_distance(b, a), d, 1e-12);
    for (auto* s : {&a, &b})
      for (auto& q : *s) q = {q.x + 104.0, q.y + 30.6};
    EXPECT_NEAR(dtw_distance(a, b), d, 1e-9);
  }
}

TEST(Dtw, ToySearchReportHasFiveMetrics) {
  std::vector<traj::Trajectory> test;
  for (std::uint32_t k = 0; k < 10; ++k)
    test.push_back(path_of("t" + std::to_string(k), {k, k + 1, k + 2, k + 3, k + 4, k + 5}));
  const auto r = dtw_search_eval(build_search_sets(test));
  EXPECT_EQ(r.metrics.queries, 10u);
  const auto text = format_report({"search", "dtw", r.metrics, 0.0, {}});
  for (const char* key : {"Acc@1", "Acc@5", "Acc@10", "Acc@20", "macro-F1"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(Markov, UnseenSourceIsUniform) {
  MarkovChain mc(5);
  mc.fit(std::vector<traj::Trajectory>{path_of("a", {0, 1, 2})});
  const auto d = mc.distribution(2);
  for (double p : d) EXPECT_DOUBLE_EQ(p, 0.2);
  EXPECT_EQ(mc.rank(2), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Markov, CountOrderingAndHandTally) {
  const std::vector<traj::Trajectory> corpus{path_of("a", {1, 2, 1, 2}), path_of("b", {1, 3}),
                                             path_of("c", {0, 1, 2}), path_of("d", {4, 4, 3}),
                                             path_of("e", {2, 1, 3})};
  // hand tally
  std::uint64_t tally[5][5] = {};
  for (const auto& t : corpus)
    for (std::size_t i = 1; i < t.size(); ++i) ++tally[t.records[i - 1].loc][t.records[i].loc];
  MarkovChain mc(5);
  mc.fit(corpus);
  for (std::uint32_t i = 0; i < 5; ++i) {
    std::uint64_t row = 0;
    for (std::uint32_t j = 0; j < 5; ++j) {
      EXPECT_EQ(mc.count(i, j), tally[i][j]);
      row += tally[i][j];
    }
    EXPECT_EQ(mc.total(i), row);
    double s = 0.0;
    for (std::uint32_t j = 0; j < 5; ++j) {
      EXPECT_DOUBLE_EQ(mc.probability(i, j), (tally[i][j] + 1.0) / (row + 5.0));
      s += mc.probability(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    auto r = mc.rank(i);
    std::sort(r.begin(), r.end());
    std::vector<std::size_t> all(5);
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(r, all);
  }
  // from 1: 1→2 twice, 1→3 once
  MarkovChain b(4);
  b.fit(std::vector<traj::Trajectory>{path_of("x", {1, 2, 1, 3}), path_of("y", {1, 2})});
  const auto r = b.rank(1);
  EXPECT_EQ(r[0], 2u);
  EXPECT_LT(std::find(r.begin(), r.end(), 2) - r.begin(),
            std::find(r.begin(), r.end(), 3) - r.begin());
}

TEST(Markov, DestinationEvalUsesLastInputLocation) {
  MarkovChain mc(4);
  mc.fit(std::vector<traj::Trajectory>{path_of("a", {0, 1, 2}), path_of("b", {3, 1, 2})});
  const std::vector<traj::Trajectory> inputs{path_of("q", {0, 1})};
  const std::vector<std::size_t> labels{2};
  EXPECT_EQ(markov_destination_eval(mc, inputs, labels).metrics.acc1, 1.0);
}

TEST(Destination, DataDropsLastRecordAndChecksLabels) {
  const std::vector<traj::Trajectory> ts{path_of("a", {0, 1, 2}), path_of("b", {3})};
  const auto d = make_destination_data(ts, 4);
  ASSERT_EQ(d.labels.size(), 1u);
  EXPECT_EQ(d.labels[0], 2u);
  EXPECT_EQ(d.inputs[0].size(), 2u);
  EXPECT_THROW(make_destination_data(ts, 2), DataError);
}

TEST(Destination, PerfectLogitsAndRandomLogits) {
  const std::size_t n = 6;
  LinearProbe probe(n, n, std::nullopt, 1);
  auto& w = probe.params().get("head.w").value;
  auto& b = probe.params().get("head.b").value;
  w = Array({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) w.at(i, i) = 5.0;
  b = Array({n}, 0.0);
  Array x({n, n}, 0.0);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) x.at(i, i) = 1.0, y[i] = i;
  const auto r = destination_eval(probe, x, y);
  EXPECT_EQ(r.metrics.acc1, 1.0);
  EXPECT_EQ(r.metrics.macro_f1, 1.0);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t classes = 10, q = 4000;
  Array scores({q, classes});
  for (auto& v : scores.values()) v = g(rng);
  std::vector<std::size_t> truth(q);
  for (auto& t : truth) t = rng() % classes;
  const double p = 1.0 / classes;
  EXPECT_NEAR(evaluate_scores(scores, truth).metrics.acc1, p, 3.0 * std::sqrt(p * (1 - p) / q));
}

TEST(Destination, ProbeLearnsSeparableClasses) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.3);
  const std::size_t k = 4, d = 6;
  auto sample = [&](std::size_t n, Array& x, std::vector<std::size_t>& y) {
    x = Array({n, d});
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % k;
      for (std::size_t j = 0; j < d; ++j) x.at(i, j) = g(rng) + (j == y[i] ? 2.0 : 0.0);
    }
  };
  Array xt, xv, xe;
  std::vector<std::size_t> yt, yv, ye;
  sample(200, xt, yt);
  sample(80, xv, yv);
  sample(80, xe, ye);
  ProbeConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 32;
  for (std::optional<std::size_t> proj :
       {std::optional<std::size_t>{}, std::optional<std::size_t>{8}}) {
    LinearProbe probe(d, k, proj, 3);
    const auto h = train_probe(probe, xt, yt, xv, yv, cfg);
    EXPECT_GE(h.best_epoch, 1u);
    EXPECT_GT(destination_eval(probe, xe, ye).metrics.acc1, 0.9);
  }
  LinearProbe probe(d, k, std::nullopt, 3);
  EXPECT_THROW(train_probe(probe, xt, std::vector<std::size_t>(200, 9), xv, yv, cfg), DataError);
}

TEST(Destination, MajorityRate) {
  const std::vector<std::size_t> y{3, 1, 3, 2, 3, 1};
  EXPECT_DOUBLE_EQ(majority_rate(y), 0.5);
}

TEST(MeanBaseline, PoolsRecordEncodingsThenProjects) {
  enc::EncoderConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.n_locations = 5;
  const MeanBaseline m(c, 12, 4);
  const std::vector<traj::FeatureSequence> seqs{{{1, 0.0, 104.0, 30.6}, {3, 5.0, 104.01, 30.61}}};
  const auto pooled = m.pooled(seqs);
  ASSERT_EQ(pooled.cols(), 8u);
  const auto e = m.embed(seqs);
  ASSERT_EQ(e.cols(), 12u);
  const auto& w = m.projection().get("proj.w").value;
  const auto& b = m.projection().get("proj.b").value;
  for (std::size_t j = 0; j < 12; ++j) {
    double s = b.data()[j];
    for (std::size_t k = 0; k < 8; ++k) s += pooled.at(0, k) * w.at(k, j);
    EXPECT_NEAR(e.at(0, j), s, 1e-12);
  }
  // permutation of records does not matter for a mean
  const std::vector<traj::FeatureSequence> swapped{{seqs[0][1], seqs[0][0]}};
  for (std::size_t k = 0; k < 8; ++k)
    EXPECT_NEAR(m.pooled(swapped).at(0, k), pooled.at(0, k), 1e-15);
}

TEST(Report, TextAndKeyValue) {
  Report r{
      "destination", "markov", {0.5, 0.75, 1.0, 1.0, 0.25, 4}, 1.5, {{"majority_rate", 0.125}}};
  const auto text = format_report(r);
  EXPECT_NE(text.find("Acc@1: 50.000"), std::string::npos) << text;
  EXPECT_NE(text.find("wall_seconds"), std::string::npos);
  const auto kv = format_kv(r);
  EXPECT_NE(kv.find("acc5=0.75\n"), std::string::npos) << kv;
  EXPECT_NE(kv.find("majority_rate=0.125\n"), std::string::npos);
  EXPECT_EQ(kv.find("wall"), std::string::npos);
}
