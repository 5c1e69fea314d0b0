#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cstte/error.hpp"
#include "cstte/trajdata/csv.hpp"
#include "cstte/trajdata/grid.hpp"
#include "cstte/trajdata/metadata.hpp"
#include "cstte/trajdata/preprocess.hpp"
#include "cstte/trajdata/trajectory.hpp"

using namespace cstte;
using namespace cstte::traj;

namespace {

Trajectory at_times(std::string id, std::vector<std::int64_t> ts) {
  Trajectory t{std::move(id), {}};
  for (auto v : ts) t.records.push_back({0, v, 104.0, 30.6});
  return t;
}

std::vector<std::int64_t> times(const Trajectory& t) {
  std::vector<std::int64_t> out;
  for (const auto& r : t.records) out.push_back(r.t);
  return out;
}

Trajectory line(std::string id, std::int64_t start, std::size_t n, double lon0 = 104.0) {
  Trajectory t{std::move(id), {}};
  for (std::size_t i = 0; i < n; ++i) {
    t.records.push_back(
        {0, start + static_cast<std::int64_t>(60 * i), lon0 + 0.001 * i, 30.6 + 0.0005 * i});
  }
  return t;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cstte_trajdata_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Parse, GroupsAndSortsByTime) {
  std::istringstream in(
      "traj_id,timestamp,lon,lat\n"
      "a,100,104.01,30.6\n"
      "a,40,104.02,30.61\n"
      "b,5,104.0,30.6\n"
      "a,70,104.03,30.62\n");
  const auto r = parse_trajectories(in);
  ASSERT_EQ(r.trajectories.size(), 2u);
  EXPECT_EQ(r.trajectories[0].id, "a");
  EXPECT_EQ(times(r.trajectories[0]), (std::vector<std::int64_t>{40, 70, 100}));
  EXPECT_EQ(r.rows, 4u);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_FALSE(r.has_loc_index);
}

TEST(Parse, ThreeRowsOneTrajectory) {
  std::istringstream in("traj_id,timestamp,lon,lat\nx,1,1,1\nx,2,1,1\nx,3,1,1\n");
  const auto r = parse_trajectories(in);
  ASSERT_EQ(r.trajectories.size(), 1u);
  EXPECT_EQ(r.trajectories[0].size(), 3u);
}

TEST(Parse, NonNumericRowIsSkippedAndCounted) {
  std::istringstream in("traj_id,timestamp,lon,lat\nx,1,1,1\nx,2,abc,1\nx,3,1,1\n");
  const auto r = parse_trajectories(in);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.trajectories[0].size(), 2u);
}

TEST(Parse, MostlyMalformedIsDataError) {
  std::istringstream in("traj_id,timestamp,lon,lat\nx,1,1,1\nx,q,1,1\nx,3,999,1\n");
  EXPECT_THROW(parse_trajectories(in), DataError);
}

TEST(Parse, MissingColumnAndMissingFile) {
  std::istringstream in("traj_id,time,lon,lat\nx,1,1,1\n");
  EXPECT_THROW(parse_trajectories(in), DataError);
  EXPECT_THROW(parse_trajectories(std::filesystem::path("/nonexistent/x.csv")), DataError);
}

TEST(Parse, ColumnOrderAndLocIndex) {
  std::istringstream in("lat,lon,loc_index,timestamp,traj_id\n30.5,104.5,7,10,k\n");
  const auto r = parse_trajectories(in);
  ASSERT_TRUE(r.has_loc_index);
  const auto& rec = r.trajectories[0].records[0];
  EXPECT_EQ(rec.loc, 7u);
  EXPECT_EQ(rec.t, 10);
  EXPECT_DOUBLE_EQ(rec.lon, 104.5);
  EXPECT_DOUBLE_EQ(rec.lat, 30.5);
}

TEST(Parse, WriteParseWriteIsByteStable) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Trajectory> ts;
  for (int k = 0; k < 5; ++k) {
    Trajectory t{"id" + std::to_string(k), {}};
    for (int i = 0; i < 7; ++i) {
      t.records.push_back({static_cast<std::uint32_t>(i * k), 1541030400 + 60 * i,
                           104.0 + u(rng) * 0.1, 30.6 + u(rng) * 0.1});
    }
    ts.push_back(t);
  }
  std::ostringstream a;
  write_trajectories(a, ts, true);
  std::istringstream in(a.str());
  const auto back = parse_trajectories(in);
  EXPECT_EQ(back.trajectories, ts);
  std::ostringstream b;
  write_trajectories(b, back.trajectories, true);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Resample, GreedyTrace) {
  EXPECT_EQ(times(resample(at_times("a", {0, 10, 70, 130}), 60)),
            (std::vector<std::int64_t>{0, 70, 130}));
}

TEST(Resample, SparseIsUnchanged) {
  const auto t = at_times("a", {0, 60, 200, 500});
  EXPECT_EQ(resample(t, 60), t);
}

TEST(Resample, TenSecondsForTenMinutes) {
  std::vector<std::int64_t> ts;
  for (std::int64_t v = 0; v <= 600; v += 10) ts.push_back(v);
  const auto r = resample(at_times("a", ts), 60);
  // oracle: walk the greedy rule by hand
  std::vector<std::int64_t> expect;
  for (auto v : ts) {
    if (expect.empty() || v >= expect.back() + 60) expect.push_back(v);
  }
  EXPECT_EQ(expect.size(), 11u);
  EXPECT_EQ(times(r), expect);
}

TEST(Resample, IdempotentAndRejectsBadInterval) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ts{0};
    for (int i = 0; i < 40; ++i) ts.push_back(ts.back() + static_cast<std::int64_t>(rng() % 90));
    const auto once = resample(at_times("a", ts), 60);
    EXPECT_EQ(resample(once, 60), once);
  }
  EXPECT_THROW(resample(at_times("a", {0, 1}), 0), ConfigError);
}

TEST(Filter, BoundaryInclusive) {
  std::vector<Trajectory> ts{line("a", 0, 19), line("b", 0, 20), line("c", 0, 21)};
  const auto kept = filter_min_length(ts, 20);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "b");
  EXPECT_EQ(kept[1].id, "c");
  EXPECT_EQ(filter_min_length({line("a", 0, 30)}, 20).size(), 1u);
  EXPECT_THROW(filter_min_length(ts, 1), ConfigError);
  EXPECT_TRUE(filter_min_length(ts, 100).empty());
}

TEST(Filter, UniformLengthsRecount) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(10, 40);
  std::vector<Trajectory> ts;
  std::size_t expect = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = len(rng);
    expect += n >= 20;
    ts.push_back(line("t" + std::to_string(i), 0, n));
  }
  EXPECT_EQ(filter_min_length(ts, 20).size(), expect);
}

TEST(Grid, OriginCornerAndEquatorBox) {
  const GridSpec g(0.0, 0.0, 0.01, 0.01, 250.0);
  EXPECT_EQ(g.n_cols(), 5u);  // ceil(1113.2 / 250)
  EXPECT_EQ(g.n_rows(), 5u);
  EXPECT_EQ(g.assign(0.0, 0.0), 0u);
  EXPECT_EQ(g.assign(0.01 - 1e-9, 0.01 - 1e-9), g.n_locations() - 1);
}

TEST(Grid, ArithmeticAgainstHandFormula) {
  const GridSpec g(104.0, 30.62, 104.104, 30.71, 250.0);
  const double m_lon = 111320.0 * std::cos((30.62 + 30.71) / 2 * M_PI / 180.0);
  EXPECT_NEAR(g.meters_per_deg_lon(), m_lon, 1e-9);
  EXPECT_EQ(g.n_cols(), static_cast<std::size_t>(std::ceil(0.104 * m_lon / 250.0)));
  EXPECT_EQ(g.n_rows(), static_cast<std::size_t>(std::ceil(0.09 * 111320.0 / 250.0)));
  const double lon = 104.05, lat = 30.66;
  const auto col = static_cast<std::size_t>(std::floor((lon - 104.0) * m_lon / 250.0));
  const auto row = static_cast<std::size_t>(std::floor((lat - 30.62) * 111320.0 / 250.0));
  EXPECT_EQ(g.assign(lon, lat), row * g.n_cols() + col);
}

TEST(Grid, ClampsAndCoversImage) {
  const GridSpec g(0.0, 0.0, 0.01, 0.01, 250.0);
  EXPECT_EQ(g.assign(-5.0, -5.0), 0u);
  EXPECT_EQ(g.assign(5.0, 5.0), g.n_locations() - 1);
  std::set<std::uint32_t> seen;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const auto idx = g.assign(0.01 * i / 200.0, 0.01 * j / 200.0);
      ASSERT_LT(idx, g.n_locations());
      seen.insert(idx);
    }
  EXPECT_EQ(seen.size(), g.n_locations());
}

TEST(Grid, DegenerateBoxIsConfigError) {
  EXPECT_THROW(GridSpec(1.0, 0.0, 1.0, 1.0), ConfigError);
  EXPECT_THROW(GridSpec(0.0, 1.0, 1.0, 0.5), ConfigError);
  EXPECT_THROW(GridSpec(0.0, 0.0, 1.0, 1.0, 0.0), ConfigError);
}

TEST(Split, HandCases) {
  auto make = [](std::size_t n) {
    std::vector<Trajectory> ts;
    for (std::size_t i = 0; i < n; ++i) ts.push_back(line("t" + std::to_string(i), 1000 - i, 3));
    return ts;
  };
  auto s10 = chronological_split(make(10));
  EXPECT_EQ(s10.train.size(), 8u);
  EXPECT_EQ(s10.validation.size(), 1u);
  EXPECT_EQ(s10.test.size(), 1u);
  auto s7 = chronological_split(make(7));
  EXPECT_EQ(s7.train.size(), 5u);
  EXPECT_EQ(s7.validation.size(), 1u);
  EXPECT_EQ(s7.test.size(), 1u);
  // latest start times go to test
  EXPECT_EQ(s10.test[0], "t0");
  EXPECT_THROW(chronological_split(make(2)), DataError);
}

TEST(Split, LargeCount) {
  std::vector<Trajectory> ts;
  ts.reserve(44551);
  for (std::size_t i = 0; i < 44551; ++i) {
    ts.push_back(Trajectory{std::to_string(i), {{0, static_cast<std::int64_t>(i), 0, 0}}});
  }
  const auto s = chronological_split(ts);
  EXPECT_EQ(s.train.size(), 35640u);
  EXPECT_EQ(s.validation.size(), 4455u);
  EXPECT_EQ(s.test.size(), 4456u);
}

TEST(Split, ExhaustiveDisjointCoveringOrdered) {
  std::mt19937_64 rng(11);
  for (std::size_t n = 3; n <= 200; ++n) {
    std::vector<Trajectory> ts;
    for (std::size_t i = 0; i < n; ++i) {
      ts.push_back(line("t" + std::to_string(i), static_cast<std::int64_t>(rng() % 500), 2));
    }
    const auto s = chronological_split(ts);
    std::map<std::string, std::int64_t> start;
    for (const auto& t : ts) start[t.id] = t.start_time();
    std::set<std::string> all;
    for (const auto* part : {&s.train, &s.validation, &s.test})
      for (const auto& id : *part) ASSERT_TRUE(all.insert(id).second) << "duplicate " << id;
    ASSERT_EQ(all.size(), n);
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::floor(0.8 * n + 1e-9)));
    auto latest = [&](const std::vector<std::string>& ids) {
      std::int64_t m = std::numeric_limits<std::int64_t>::min();
      for (const auto& id : ids) m = std::max(m, start[id]);
      return m;
    };
    auto earliest = [&](const std::vector<std::string>& ids) {
      std::int64_t m = std::numeric_limits<std::int64_t>::max();
      for (const auto& id : ids) m = std::min(m, start[id]);
      return m;
    };
    if (!s.validation.empty()) {
      EXPECT_LE(latest(s.train), earliest(s.validation));
    }
    if (!s.validation.empty() && !s.test.empty()) {
      EXPECT_LE(latest(s.validation), earliest(s.test));
    }
  }
}

TEST(Normalization, MinutesAndRoundTrip) {
  const std::vector<Trajectory> train{at_times("a", {5000, 9000}), at_times("b", {1000, 1200})};
  const auto norm = fit_normalization(train);
  EXPECT_EQ(norm.epoch, 1000);
  EXPECT_EQ(norm.apply(1000), 0.0);
  EXPECT_EQ(norm.apply(1000 + 3600), 60.0);
  for (std::int64_t t : {1000LL, 1061LL, 1541030400LL, 999LL}) {
    EXPECT_NEAR(norm.invert(norm.apply(t)), static_cast<double>(t), 1e-9);
  }
  const auto f = to_features(train[0], norm);
  EXPECT_DOUBLE_EQ(f[1].t, 8000.0 / 60.0);
  EXPECT_DOUBLE_EQ(f[1].cx, 104.0);
}

TEST(Preprocess, PipelineAndMetadataRoundTrip) {
  std::vector<Trajectory> raw;
  for (int k = 0; k < 30; ++k) {
    auto t = line("t" + std::to_string(k), 1541030400 + 3600 * k, 25 + k % 5, 104.0 + 0.0001 * k);
    // dense duplicates that resampling must drop
    t.records.push_back({0, t.records.back().t + 10, 104.05, 30.61});
    raw.push_back(t);
  }
  raw.push_back(line("short", 1541030400, 10));

  PreprocessOptions opts;
  opts.box = BoundingBox{104.0, 30.5, 104.1, 30.7};
  const auto ds = preprocess(raw, opts);
  EXPECT_EQ(ds.trajectories.size(), 30u);
  EXPECT_EQ(ds.n_locations, ds.grid.n_locations());
  EXPECT_EQ(ds.split.train.size(), 24u);
  EXPECT_EQ(ds.normalization.epoch, 1541030400);
  for (const auto& t : ds.trajectories) {
    EXPECT_GE(t.size(), 20u);
    for (const auto& r : t.records) EXPECT_EQ(r.loc, ds.grid.assign(r.lon, r.lat));
  }

  const auto path = scratch("ds.csv");
  save_dataset(path, ds);
  EXPECT_TRUE(std::filesystem::exists(metadata_path(path)));
  const auto back = load_dataset(path);
  EXPECT_EQ(back.trajectories, ds.trajectories);
  EXPECT_EQ(back.split.test, ds.split.test);
  EXPECT_EQ(back.n_locations, ds.n_locations);
  EXPECT_EQ(back.normalization.epoch, ds.normalization.epoch);
  EXPECT_EQ(back.grid.n_cols(), ds.grid.n_cols());
}

TEST(Preprocess, PassthroughKeepsIndices) {
  std::vector<Trajectory> raw;
  for (int k = 0; k < 5; ++k) {
    auto t = line("t" + std::to_string(k), 1000 * k, 20);
    for (std::size_t i = 0; i < t.size(); ++i) t.records[i].loc = static_cast<std::uint32_t>(i * 3);
    raw.push_back(t);
  }
  PreprocessOptions opts;
  opts.mode = VocabularyMode::passthrough;
  const auto ds = preprocess(raw, opts);
  EXPECT_EQ(ds.n_locations, 19u * 3 + 1);
  EXPECT_EQ(ds.trajectories[0].records[4].loc, 12u);
}

TEST(Preprocess, EverythingFilteredIsDataError) {
  EXPECT_THROW(preprocess({line("a", 0, 5), line("b", 0, 5), line("c", 0, 5)}, {}), DataError);
}
