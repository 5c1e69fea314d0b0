#include "cstte/app/gradcheck_suite.hpp"

#include <cmath>

#include "cstte/augment/batch.hpp"
#include "cstte/encoder/encoder.hpp"
#include "cstte/numcore/ops.hpp"
#include "cstte/numcore/random.hpp"
#include "cstte/pretrain/info_nce.hpp"
#include "cstte/pretrain/trainer.hpp"

namespace cstte::app {

using num::Array;
using num::Tape;
using num::Var;

namespace {

struct Builder {
  num::Rng rng;
  std::vector<GradCase> cases;

  Array random(num::Shape s, double bound = 1.0) {
    return num::uniform_array(std::move(s), bound, rng);
  }

  // values bounded away from zero so relu kinks stay out of the stencil
  Array away_from_zero(num::Shape s) {
    Array a = random(std::move(s));
    for (auto& v : a.values()) v = v < 0 ? v - 0.2 : v + 0.2;
    return a;
  }

  GradCase& add(std::string name, bool linear) {
    GradCase c;
    c.name = std::move(name);
    c.linear = linear;
    c.tolerance = linear ? 1e-6 : 1e-4;
    c.params = std::make_shared<num::ParameterSet>();
    cases.push_back(std::move(c));
    return cases.back();
  }
};

// sum(y ⊙ R) with a fixed random R, so every output entry matters
Var weighted(Tape& t, Var y, const Array& r) { return num::sum(num::mul(y, t.constant(r))); }

}  // namespace

std::vector<GradCase> gradient_cases(std::uint64_t seed) {
  Builder b{num::Rng(seed), {}};

  auto unary = [&](std::string name, bool linear, num::Shape in, num::Shape out,
                   std::function<Var(Var)> op, bool kinks = false) {
    auto& c = b.add(std::move(name), linear);
    auto& x = c.params->add("x", kinks ? b.away_from_zero(in) : b.random(in));
    const Array r = b.random(out);
    c.loss = [&x, r, op](Tape& t) { return weighted(t, op(t.param(x)), r); };
  };
  auto binary = [&](std::string name, bool linear, num::Shape sa, num::Shape sb, num::Shape out,
                    std::function<Var(Var, Var)> op) {
    auto& c = b.add(std::move(name), linear);
    auto& x = c.params->add("a", b.random(sa));
    auto& y = c.params->add("b", b.random(sb));
    const Array r = b.random(out);
    c.loss = [&x, &y, r, op](Tape& t) { return weighted(t, op(t.param(x), t.param(y)), r); };
  };

  binary("matmul", true, {3, 4}, {4, 2}, {3, 2}, num::matmul);
  unary("transpose", true, {3, 5}, {5, 3}, num::transpose);
  binary("add", true, {4, 3}, {4, 3}, {4, 3}, num::add);
  binary("sub", true, {4, 3}, {4, 3}, {4, 3}, num::sub);
  binary("mul", true, {4, 3}, {4, 3}, {4, 3}, num::mul);
  unary("scale", true, {3, 3}, {3, 3}, [](Var x) { return num::scale(x, -2.5); });
  binary("add_row", true, {5, 4}, {4}, {5, 4}, num::add_row);
  unary("tile_rows", true, {2, 3}, {6, 3}, [](Var x) { return num::tile_rows(x, 3); });
  unary("sum", true, {4, 4}, {}, num::sum);
  unary("mean", true, {4, 4}, {}, num::mean);
  unary("reshape", true, {4, 6}, {3, 8}, [](Var x) { return num::reshape(x, {3, 8}); });
  binary("concat_cols", true, {3, 2}, {3, 5}, {3, 7}, [](Var x, Var y) {
    const Var p[] = {x, y};
    return num::concat_cols(p);
  });
  binary("concat_rows", true, {2, 4}, {3, 4}, {5, 4}, [](Var x, Var y) {
    const Var p[] = {x, y};
    return num::concat_rows(p);
  });
  unary("slice_rows", true, {6, 3}, {3, 3}, [](Var x) { return num::slice_rows(x, 2, 3); });
  unary("gather_rows", true, {5, 4}, {6, 4}, [](Var x) {
    const std::size_t idx[] = {4, 0, 2, 2, 1, 4};
    return num::gather_rows(x, idx);
  });
  unary("pick_cols", true, {3, 6}, {3, 2}, [](Var x) {
    const std::size_t idx[] = {5, 0, 1, 1, 3, 2};
    return num::pick_cols(x, idx, 2);
  });
  {
    auto& c = b.add("linear", true);
    auto& x = c.params->add("x", b.random({4, 5}));
    auto& w = c.params->add("w", b.random({5, 3}));
    auto& bias = c.params->add("b", b.random({3}));
    const Array r = b.random({4, 3});
    c.loss = [&, r](Tape& t) {
      return weighted(t, num::linear(t.param(x), t.param(w), t.param(bias)), r);
    };
  }

  unary("relu", false, {4, 5}, {4, 5}, num::relu, true);
  unary("softmax_rows", false, {3, 6}, {3, 6}, num::softmax_rows);
  unary("l2_normalize_rows", false, {4, 5}, {4, 5},
        [](Var x) { return num::l2_normalize_rows(x); });
  {
    auto& c = b.add("layer_norm", false);
    auto& x = c.params->add("x", b.random({4, 6}));
    auto& g = c.params->add("gain", b.random({6}));
    auto& bias = c.params->add("bias", b.random({6}));
    const Array r = b.random({4, 6});
    c.loss = [&, r](Tape& t) {
      return weighted(t, num::layer_norm(t.param(x), t.param(g), t.param(bias)), r);
    };
  }
  unary("cross_entropy", false, {4, 5}, {}, [](Var x) {
    const std::size_t targets[] = {0, 3, 4, 1};
    return num::cross_entropy(x, targets);
  });
  {
    auto& c = b.add("periodic_encode", false);
    auto& w = c.params->add("omega", b.random({4}));
    const std::vector<double> v = {0.3, -1.2, 2.5, 0.9, -0.4};
    const Array r = b.random({5, 8});
    c.loss = [&, v, r](Tape& t) { return weighted(t, num::periodic_encode(t.param(w), v), r); };
  }
  {
    auto& c = b.add("segment_attention", false);
    auto& q = c.params->add("q", b.random({2, 8}));
    auto& k = c.params->add("k", b.random({7, 8}));
    auto& v = c.params->add("v", b.random({7, 8}));
    const Array r = b.random({4, 8});
    c.loss = [&, r](Tape& t) {
      const std::size_t offsets[] = {0, 3, 7};
      return weighted(t, num::segment_attention(t.param(q), t.param(k), t.param(v), offsets, 2), r);
    };
  }
  {
    auto& c = b.add("multi_head_attention", false);
    auto& ps = *c.params;
    auto& query = ps.add("query", b.random({2, 8}));
    auto& x = ps.add("x", b.random({5, 8}));
    std::vector<num::Parameter*> w;
    for (const char* n : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"}) {
      const bool bias = n[0] == 'b';
      w.push_back(&ps.add(n, bias ? b.random({8}, 0.3) : b.random({8, 8}, 0.5)));
    }
    const Array r = b.random({2, 8});
    c.loss = [&query, &x, w, r](Tape& t) {
      const num::AttentionWeights aw{t.param(*w[0]), t.param(*w[1]), t.param(*w[2]),
                                     t.param(*w[3]), t.param(*w[4]), t.param(*w[5]),
                                     t.param(*w[6]), t.param(*w[7])};
      const Var xv = t.param(x);
      return weighted(t, num::multi_head_attention(t.param(query), xv, xv, 2, aw), r);
    };
  }
  {
    auto& c = b.add("feed_forward", false);
    auto& x = c.params->add("x", b.random({3, 4}));
    auto& w1 = c.params->add("w1", b.random({4, 6}));
    auto& b1 = c.params->add("b1", b.random({6}, 0.1));
    auto& w2 = c.params->add("w2", b.random({6, 4}));
    auto& b2 = c.params->add("b2", b.random({4}));
    const Array r = b.random({3, 4});
    c.loss = [&, r](Tape& t) {
      return weighted(
          t, num::feed_forward(t.param(x), t.param(w1), t.param(b1), t.param(w2), t.param(b2)), r);
    };
  }
  {
    auto& c = b.add("info_nce", false);
    auto& q = c.params->add("q", b.random({1, 6}));
    auto& kp = c.params->add("k_pos", b.random({1, 6}));
    auto& n1 = c.params->add("k_neg1", b.random({1, 6}));
    auto& n2 = c.params->add("k_neg2", b.random({1, 6}));
    c.loss = [&](Tape& t) {
      const Var negs[] = {t.param(n1), t.param(n2)};
      return pre::info_nce(t.param(q), t.param(kp), negs, 0.5);
    };
  }
  {
    // composed model on a 3-pair toy batch
    auto& c = b.add("encoder+info_nce", false);
    enc::EncoderConfig cfg;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.anchors = {2};
    cfg.ffn_hidden = 16;
    cfg.n_locations = 10;
    auto model = std::make_shared<enc::Encoder>(cfg, seed);
    c.params = std::shared_ptr<num::ParameterSet>(model, &model->params());
    std::uniform_int_distribution<std::uint32_t> loc(0, 9);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<traj::FeatureSequence> seqs(3);
    for (auto& s : seqs) {
      for (int i = 0; i < 6; ++i) {
        s.push_back(
            {loc(b.rng), 3.0 * i + unit(b.rng), 0.5 + 0.2 * unit(b.rng), 0.3 + 0.2 * unit(b.rng)});
      }
    }
    std::vector<aug::SamplePair> pairs;
    for (std::size_t i = 0; i < 3; ++i) {
      auto p = *aug::two_hop_split(6);
      p.source = i;
      pairs.push_back(p);
    }
    auto batch = aug::assign_negatives(pairs, 2, b.rng);
    std::vector<traj::FeatureSequence> inputs;
    for (const auto& p : batch.pairs) inputs.push_back(pre::take(seqs[p.source], p.query));
    for (const auto& p : batch.pairs) inputs.push_back(pre::take(seqs[p.source], p.positive));
    c.loss = [model, batch, inputs](Tape& t) {
      return pre::batch_info_nce(model->encode(t, inputs), batch, 0.07);
    };
  }
  return std::move(b.cases);
}

std::vector<GradCaseResult> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradCaseResult> out;
  for (auto& c : gradient_cases(seed)) {
    const auto errs = num::compare_with_finite_differences(c.params->pointers(), c.loss);
    const double e = num::max_rel_error(errs);
    out.push_back({c.name, e, c.tolerance, e <= c.tolerance});
  }
  return out;
}

}  // namespace cstte::app
