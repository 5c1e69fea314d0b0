#include "cstte/encoder/encoder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cstte/encoder/config_json.hpp"
#include "cstte/error.hpp"
#include "cstte/numcore/ops.hpp"
#include "cstte/numcore/random.hpp"
#include "oracle/encoder.hpp"

using namespace cstte;
using namespace cstte::enc;
using traj::FeatureRecord;
using traj::FeatureSequence;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.d_model = 16;
  c.heads = 4;
  c.ffn_hidden = 24;
  c.n_locations = 30;
  return c;
}

FeatureSequence random_sequence(std::size_t n, std::size_t n_loc, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> loc(0, static_cast<std::uint32_t>(n_loc - 1));
  std::uniform_real_distribution<double> t(0.0, 10000.0), x(104.0, 104.1), y(30.6, 30.7);
  FeatureSequence s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({loc(rng), t(rng), x(rng), y(rng)});
  return s;
}

// Randomises every parameter so gains, biases and frequencies are generic.
void scramble(Encoder& e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto* p : e.params().pointers()) {
    for (auto& v : p->value.values()) v = p->name.ends_with("gain") ? 1.0 + u(rng) * 0.5 : u(rng);
  }
}

std::vector<double> embed_one(const Encoder& e, const FeatureSequence& s) {
  const FeatureSequence seqs[] = {s};
  return e.embed(seqs).data();
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Psi, ZeroQuarterTurnAndDirect) {
  num::Tape tape(num::GradMode::inference);
  const auto omega = tape.constant(frequency_ladder(8));
  const double zero[] = {0.0};
  EXPECT_EQ(num::periodic_encode(omega, zero).value().data(),
            (std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0}));

  const double quarter[] = {std::numbers::pi / 2};
  const auto one = num::periodic_encode(tape.constant(num::Array({1}, {1.0})), quarter).value();
  EXPECT_NEAR(one.data()[0], 0.0, 1e-16);
  EXPECT_EQ(one.data()[1], 1.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  oracle::Vec w(4);
  for (auto& v : w) v = u(rng);
  const double v13[] = {1.3};
  const auto got = num::periodic_encode(tape.constant(num::Array({4}, w)), v13).value().data();
  const auto want = oracle::psi(w, 1.3);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(got[i], want[i], 1e-15);
    EXPECT_LE(std::abs(got[i]), 1.0);
  }
}

TEST(Psi, ShiftInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.0, 2.0), v(-1e3, 1e3), d(-50.0, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::Vec omega(8);
    for (auto& x : omega) x = w(rng);
    const double v1 = v(rng), v2 = v(rng), delta = d(rng);
    const double vals[] = {v1, v1 + delta, v2, v2 + delta};
    num::Tape tape(num::GradMode::inference);
    const auto p = num::periodic_encode(tape.constant(num::Array({8}, omega)), vals).value();
    auto dot = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t k = 0; k < 16; ++k) s += p.at(a, k) * p.at(b, k);
      return s;
    };
    double expect = 0.0;
    for (double x : omega) expect += std::cos(x * delta);
    EXPECT_NEAR(dot(0, 1), dot(2, 3), 1e-9);
    EXPECT_NEAR(dot(0, 1), expect, 1e-9);
  }
}

TEST(FrequencyLadder, Values) {
  const auto w = frequency_ladder(8);
  ASSERT_EQ(w.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(w.data()[i], 1.0 / std::pow(10000.0, 2.0 * i / 8.0));
  }
}

TEST(Config, DefaultsAndValidation) {
  EncoderConfig c;
  c.n_locations = 5;
  EXPECT_EQ(c.output_dim(), 128u);
  EXPECT_EQ(c.heads, 8u);
  EXPECT_NO_THROW(c.validate());
  auto bad = [&](auto mutate) {
    EncoderConfig b = c;
    mutate(b);
    EXPECT_THROW(b.validate(), ConfigError);
  };
  bad([](EncoderConfig& b) { b.d_model = 63; });
  bad([](EncoderConfig& b) { b.heads = 5; });
  bad([](EncoderConfig& b) { b.d_model = 10, b.heads = 2; });  // d/2 odd
  bad([](EncoderConfig& b) { b.anchors = {}; });
  bad([](EncoderConfig& b) { b.anchors = {2, 0}; });
  bad([](EncoderConfig& b) { b.n_locations = 0; });
  bad([](EncoderConfig& b) { b.use_location = b.use_time = b.use_coords = false; });
}

TEST(Config, JsonRoundTripAndTypeErrors) {
  EncoderConfig c = small_config();
  c.anchors = {3, 2};
  c.use_time = false;
  const auto back = encoder_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(encoder_config_from_json(nlohmann::json{{"d_model", "big"}}), ConfigError);
}

TEST(Encoder, ParameterNamesAndShapes) {
  const Encoder e(small_config(), 1);
  EXPECT_EQ(e.params().get("loc_emb").value.shape(), (num::Shape{30, 16}));
  EXPECT_EQ(e.params().get("psi_t.omega").value.shape(), (num::Shape{8}));
  EXPECT_EQ(e.params().get("psi_cx.omega").value.shape(), (num::Shape{4}));
  EXPECT_EQ(e.params().get("layer1.anchor").value.shape(), (num::Shape{2, 16}));
  EXPECT_EQ(e.params().get("layer1.ffn.w1").value.shape(), (num::Shape{16, 24}));
  EXPECT_EQ(e.params().get("layer1.norm2.gain").value.data(), std::vector<double>(16, 1.0));
  const double bound = std::sqrt(1.0 / 16.0);
  for (double v : e.params().get("layer1.attn.wq").value.data()) EXPECT_LE(std::abs(v), bound);
  // seeded
  const Encoder f(small_config(), 1);
  EXPECT_EQ(f.params().get("loc_emb").value.data(), e.params().get("loc_emb").value.data());

  auto ps = e.params();
  ps.get("loc_emb").value = num::Array({29, 16}, 0.0);
  EXPECT_THROW(Encoder(small_config(), ps), ConfigError);
}

TEST(Encoder, RecordEncodingCases) {
  auto c = small_config();
  Encoder e(c, 4);
  scramble(e, 5);
  const FeatureSequence seq{{7, 123.4, 104.03, 30.64}, {0, 0.0, 0.0, 0.0}};
  num::Tape tape(num::GradMode::inference);
  const FeatureSequence seqs[] = {seq};
  const auto z = e.encode_records(tape, seqs).value();
  for (std::size_t i = 0; i < 2; ++i) {
    const auto want = oracle::record_vector(e.params(), c, seq[i], i);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(z.at(i, k), want[k], 1e-15);
  }

  // location only: plain lookup
  auto lc = c;
  lc.use_time = lc.use_coords = false;
  Encoder loc_only(lc, 4);
  num::Tape t2(num::GradMode::inference);
  const auto z2 = loc_only.encode_records(t2, seqs).value();
  const auto row = loc_only.params().get("loc_emb").value.row(7);
  EXPECT_TRUE(std::equal(row.begin(), row.end(), z2.row(0).begin()));

  // zero inputs with a zero table row: Ψ(0) pattern, doubled where t and
  // coordinate encodings overlap
  auto& table = e.params().get("loc_emb").value;
  std::fill(table.row(0).begin(), table.row(0).end(), 0.0);
  num::Tape t3(num::GradMode::inference);
  const auto z3 = e.encode_records(t3, seqs).value();
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(z3.at(1, k), k % 2 == 0 ? 2.0 : 0.0);
}

TEST(Encoder, OutOfVocabularyIsDataError) {
  const Encoder e(small_config(), 1);
  EXPECT_THROW(embed_one(e, {{30, 0.0, 0.0, 0.0}}), DataError);
  EXPECT_THROW(embed_one(e, {}), ContractError);
}

TEST(Encoder, MatchesDenseOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = small_config();
    if (trial % 3 == 1) c.anchors = {3, 2};
    if (trial % 5 == 2) c.use_position = true;
    Encoder e(c, 100 + trial);
    scramble(e, 200 + trial);
    const auto seq = random_sequence(1 + trial % 7, c.n_locations, rng);
    EXPECT_LE(max_diff(embed_one(e, seq), oracle::embed(e.params(), c, seq)), 1e-10)
        << "trial " << trial;
  }
}

TEST(Encoder, ThreeRecordToyAndSingleRecord) {
  auto c = small_config();
  Encoder e(c, 7);
  scramble(e, 8);
  const FeatureSequence toy{
      {1, 10.0, 104.01, 30.61}, {2, 11.0, 104.02, 30.62}, {3, 12.0, 104.03, 30.63}};
  EXPECT_LE(max_diff(embed_one(e, toy), oracle::embed(e.params(), c, toy)), 1e-10);
  const FeatureSequence one{{4, 5.0, 104.0, 30.6}};
  EXPECT_LE(max_diff(embed_one(e, one), oracle::embed(e.params(), c, one)), 1e-10);
}

TEST(Encoder, DuplicatedRowsLeaveOutputUnchanged) {
  std::mt19937_64 rng(9);
  auto c = small_config();
  Encoder e(c, 9);
  scramble(e, 10);
  const auto seq = random_sequence(5, c.n_locations, rng);
  auto doubled = seq;
  doubled.insert(doubled.end(), seq.begin(), seq.end());
  EXPECT_LE(max_diff(embed_one(e, seq), embed_one(e, doubled)), 1e-12);
}

TEST(Encoder, RecordPermutationIsBitExact) {
  std::mt19937_64 rng(11);
  auto c = small_config();
  c.anchors = {3, 2};
  Encoder e(c, 11);
  scramble(e, 12);
  for (int trial = 0; trial < 20; ++trial) {
    auto seq = random_sequence(2 + trial, c.n_locations, rng);
    const auto base = embed_one(e, seq);
    std::shuffle(seq.begin(), seq.end(), rng);
    EXPECT_EQ(embed_one(e, seq), base);
  }
}

TEST(Encoder, OutputShapeLaw) {
  std::mt19937_64 rng(13);
  for (std::vector<std::size_t> anchors : {std::vector<std::size_t>{1}, {2}, {4, 3}, {2, 5, 1}}) {
    auto c = small_config();
    c.anchors = anchors;
    const Encoder e(c, 1);
    for (std::size_t n : {1u, 2u, 9u}) {
      EXPECT_EQ(embed_one(e, random_sequence(n, c.n_locations, rng)).size(),
                anchors.back() * c.d_model);
    }
  }
  EncoderConfig def;
  def.n_locations = 3;
  EXPECT_EQ(embed_one(Encoder(def, 1), {{0, 1.0, 2.0, 3.0}}).size(), 128u);
}

TEST(Encoder, BatchRowsAreIndependent) {
  std::mt19937_64 rng(14);
  auto c = small_config();
  const Encoder e(c, 2);
  std::vector<FeatureSequence> seqs;
  for (std::size_t n : {3u, 8u, 1u, 5u}) seqs.push_back(random_sequence(n, c.n_locations, rng));
  const auto all = e.embed(seqs, 3);
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto one = embed_one(e, seqs[s]);
    EXPECT_TRUE(std::equal(one.begin(), one.end(), all.row(s).begin())) << s;
  }
}

TEST(Encoder, AblationInvariances) {
  std::mt19937_64 rng(15);
  auto base = small_config();
  const auto seq = random_sequence(6, base.n_locations, rng);
  auto changed = [&](auto mutate) {
    auto s = seq;
    for (auto& r : s) mutate(r);
    return s;
  };
  auto no_time = base;
  no_time.use_time = false;
  Encoder et(no_time, 3);
  EXPECT_EQ(embed_one(et, seq), embed_one(et, changed([](FeatureRecord& r) { r.t += 777.5; })));
  auto no_coords = base;
  no_coords.use_coords = false;
  Encoder ec(no_coords, 3);
  EXPECT_EQ(embed_one(ec, seq), embed_one(ec, changed([](FeatureRecord& r) {
                                            r.cx += 0.01;
                                            r.cy -= 0.02;
                                          })));
  auto no_loc = base;
  no_loc.use_location = false;
  Encoder el(no_loc, 3);
  EXPECT_EQ(embed_one(el, seq),
            embed_one(el, changed([](FeatureRecord& r) { r.loc = (r.loc + 1) % 30; })));
  // and the full model does see timestamps
  Encoder full(base, 3);
  EXPECT_NE(embed_one(full, seq), embed_one(full, changed([](FeatureRecord& r) { r.t += 777.5; })));
}

TEST(Encoder, EveryParameterReceivesGradient) {
  std::mt19937_64 rng(16);
  auto c = small_config();
  c.anchors = {3, 2};
  Encoder e(c, 4);
  std::vector<FeatureSequence> seqs{random_sequence(5, c.n_locations, rng),
                                    random_sequence(4, c.n_locations, rng)};
  num::Tape tape;
  const auto out = e.encode(tape, seqs);
  num::Array r(out.value().shape());
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : r.values()) v = u(rng);
  tape.backward(num::sum(num::mul(out, tape.constant(r))));
  for (const auto* p : e.params().pointers()) {
    ASSERT_TRUE(p->grad.has_value()) << p->name;
  }
  for (const char* w : {"psi_t.omega", "psi_cx.omega", "psi_cy.omega"}) {
    const auto g = e.params().get(w).grad->data();
    EXPECT_TRUE(std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; })) << w;
  }
}
