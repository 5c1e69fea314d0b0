#include "cstte/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"

namespace cstte::num {

namespace {

Tape& tape_of(std::initializer_list<Var> vars) {
  Tape* t = nullptr;
  for (const auto& v : vars) {
    if (!v.valid()) throw ContractError("uninitialised variable passed to operator");
    if (t && &v.tape() != t) throw ContractError("operands recorded on different tapes");
    t = &v.tape();
  }
  return *t;
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// C[m×n] += A[m×k]·B[k×n]; rows of C are independent, and each element sums
// over k in ascending order regardless of row blocking.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t work = std::max<std::size_t>(1, k * n);
  parallel_for(m, std::max<std::size_t>(1, 65536 / work), [=](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* ci = c + i * n;
      const double* ai = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  });
}

// C[m×k] += A[m×n]·B[k×n]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
      c[i * k + p] += s;
    }
  }
}

// C[k×n] += A[m×k]ᵀ·B[m×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

void axpy(std::span<double> dst, std::span<const double> src, double factor = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  auto& t = tape_of({a, b});
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Array out(Shape{m, n});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  const Var in[] = {a, b};
  return t.record(
      std::move(out), in,
      [a, b, m, k, n](Tape& tp, const Array& g) {
        if (a.requires_grad()) {
          gemm_nt(g.data().data(), b.value().data().data(), tp.grad(a).data().data(), m, n, k);
        }
        if (b.requires_grad()) {
          gemm_tn(a.value().data().data(), g.data().data(), tp.grad(b).data().data(), m, k, n);
        }
      },
      "matmul");
}

Var transpose(Var a) {
  auto& t = tape_of({a});
  require_rank(a, 2, "transpose");
  const auto& av = a.value();
  const std::size_t m = av.shape()[0], n = av.shape()[1];
  Array out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  const Var in[] = {a};
  return t.record(
      std::move(out), in,
      [a, m, n](Tape& tp, const Array& g) {
        auto& ga = tp.grad(a);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
      },
      "transpose");
}

Var add(Var a, Var b) {
  auto& t = tape_of({a, b});
  require_same_shape(a, b, "add");
  Array out = a.value();
  axpy(out.values(), b.value().values());
  const Var in[] = {a, b};
  return t.record(
      std::move(out), in,
      [a, b](Tape& tp, const Array& g) {
        if (a.requires_grad()) axpy(tp.grad(a).values(), g.values());
        if (b.requires_grad()) axpy(tp.grad(b).values(), g.values());
      },
      "add");
}

Var sub(Var a, Var b) {
  auto& t = tape_of({a, b});
  require_same_shape(a, b, "sub");
  Array out = a.value();
  axpy(out.values(), b.value().values(), -1.0);
  const Var in[] = {a, b};
  return t.record(
      std::move(out), in,
      [a, b](Tape& tp, const Array& g) {
        if (a.requires_grad()) axpy(tp.grad(a).values(), g.values());
        if (b.requires_grad()) axpy(tp.grad(b).values(), g.values(), -1.0);
      },
      "sub");
}

Var mul(Var a, Var b) {
  auto& t = tape_of({a, b});
  require_same_shape(a, b, "mul");
  Array out = a.value();
  const auto bv = b.value().values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  const Var in[] = {a, b};
  return t.record(
      std::move(out), in,
      [a, b](Tape& tp, const Array& g) {
        const auto gv = g.values();
        if (a.requires_grad()) {
          auto ga = tp.grad(a).values();
          const auto bv = b.value().values();
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv[i] * bv[i];
        }
        if (b.requires_grad()) {
          auto gb = tp.grad(b).values();
          const auto av = a.value().values();
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gv[i] * av[i];
        }
      },
      "mul");
}

Var scale(Var a, double factor) {
  auto& t = tape_of({a});
  Array out = a.value();
  for (auto& v : out.values()) v *= factor;
  const Var in[] = {a};
  return t.record(
      std::move(out), in,
      [a, factor](Tape& tp, const Array& g) { axpy(tp.grad(a).values(), g.values(), factor); },
      "scale");
}

Var add_row(Var x, Var bias) {
  auto& t = tape_of({x, bias});
  require_rank(x, 2, "add_row");
  require_rank(bias, 1, "add_row");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.shape()[0] != n) {
    throw DimensionError("add_row: bias " + shape_string(bias.shape()) + " does not fit " +
                         shape_string(x.shape()));
  }
  Array out = x.value();
  const auto bv = bias.value().values();
  for (std::size_t i = 0; i < m; ++i) axpy(out.row(i), bv);
  const Var in[] = {x, bias};
  return t.record(
      std::move(out), in,
      [x, bias, m](Tape& tp, const Array& g) {
        if (x.requires_grad()) axpy(tp.grad(x).values(), g.values());
        if (bias.requires_grad()) {
          auto gb = tp.grad(bias).values();
          for (std::size_t i = 0; i < m; ++i) axpy(gb, g.row(i));
        }
      },
      "add_row");
}

Var tile_rows(Var x, std::size_t times) {
  auto& t = tape_of({x});
  require_rank(x, 2, "tile_rows");
  if (times == 0) throw DimensionError("tile_rows: zero copies");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  Array out(Shape{times * m, n});
  const auto xv = x.value().values();
  for (std::size_t r = 0; r < times; ++r) {
    std::copy(xv.begin(), xv.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * m * n));
  }
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x, times, m, n](Tape& tp, const Array& g) {
        auto gx = tp.grad(x).values();
        for (std::size_t r = 0; r < times; ++r) {
          axpy(gx, g.values().subspan(r * m * n, m * n));
        }
      },
      "tile_rows");
}

Var relu(Var x) {
  auto& t = tape_of({x});
  Array out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x](Tape& tp, const Array& g) {
        auto gx = tp.grad(x).values();
        const auto xv = x.value().values();
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (xv[i] > 0.0) gx[i] += g[i];
        }
      },
      "relu");
}

Var softmax_rows(Var x) {
  auto& t = tape_of({x});
  require_rank(x, 2, "softmax_rows");
  const std::size_t m = x.shape()[0];
  Array out = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (auto& v : r) {
      v = std::exp(v - mx);
      s += v;
    }
    for (auto& v : r) v /= s;
  }
  Array saved = out;
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x, y = std::move(saved), m](Tape& tp, const Array& g) {
        auto& gx = tp.grad(x);
        for (std::size_t i = 0; i < m; ++i) {
          const auto yr = y.row(i);
          const auto gr = g.row(i);
          double dot = 0.0;
          for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
          auto dst = gx.row(i);
          for (std::size_t j = 0; j < yr.size(); ++j) dst[j] += yr[j] * (gr[j] - dot);
        }
      },
      "softmax_rows");
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  auto& t = tape_of({x, gain, bias});
  if (x.shape().empty()) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  require_rank(gain, 1, "layer_norm");
  require_rank(bias, 1, "layer_norm");
  if (gain.shape()[0] != d || bias.shape()[0] != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) +
                         " do not fit last extent of " + shape_string(x.shape()));
  }
  const std::size_t m = x.value().size() / d;
  const auto xv = x.value().values();
  const auto gv = gain.value().values();
  const auto bv = bias.value().values();
  Array out(x.shape());
  Array xhat(x.shape());
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = xv.data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xi[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xi[j] - mu) * inv;
      xhat[i * d + j] = h;
      out[i * d + j] = h * gv[j] + bv[j];
    }
  }
  const Var in[] = {x, gain, bias};
  return t.record(
      std::move(out), in,
      [x, gain, bias, d, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                                  const Array& g) {
        if (gain.requires_grad()) {
          auto gg = tp.grad(gain).values();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[i * d + j] * xhat[i * d + j];
        }
        if (bias.requires_grad()) {
          auto gb = tp.grad(bias).values();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
        }
        if (x.requires_grad()) {
          auto gx = tp.grad(x).values();
          const auto gv = gain.value().values();
          std::vector<double> dh(d);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              dh[j] = g[i * d + j] * gv[j];
              mean_dh += dh[j];
              mean_dh_h += dh[j] * xhat[i * d + j];
            }
            mean_dh /= static_cast<double>(d);
            mean_dh_h /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              gx[i * d + j] += inv_std[i] * (dh[j] - mean_dh - xhat[i * d + j] * mean_dh_h);
            }
          }
        }
      },
      "layer_norm");
}

Var l2_normalize_rows(Var x, double eps) {
  auto& t = tape_of({x});
  require_rank(x, 2, "l2_normalize_rows");
  const std::size_t m = x.shape()[0];
  Array out = x.value();
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (double v : r) s += v * v;
    norms[i] = std::sqrt(s) + eps;
    for (auto& v : r) v /= norms[i];
  }
  Array y = out;
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x, m, y = std::move(y), norms = std::move(norms)](Tape& tp, const Array& g) {
        auto& gx = tp.grad(x);
        for (std::size_t i = 0; i < m; ++i) {
          const auto yr = y.row(i);
          const auto gr = g.row(i);
          double dot = 0.0;
          for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
          auto dst = gx.row(i);
          for (std::size_t j = 0; j < yr.size(); ++j) {
            dst[j] += (gr[j] - yr[j] * dot) / norms[i];
          }
        }
      },
      "l2_normalize_rows");
}

Var sum(Var x) {
  auto& t = tape_of({x});
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const Var in[] = {x};
  return t.record(
      Array::scalar(s), in,
      [x](Tape& tp, const Array& g) {
        const double gv = g[0];
        for (auto& v : tp.grad(x).values()) v += gv;
      },
      "sum");
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var reshape(Var x, Shape shape) {
  auto& t = tape_of({x});
  Array out = x.value().reshaped(std::move(shape));
  const Var in[] = {x};
  return t.record(
      std::move(out), in, [x](Tape& tp, const Array& g) { axpy(tp.grad(x).values(), g.values()); },
      "reshape");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  auto& t = tape_of({parts.front()});
  const std::size_t m = parts.front().shape().at(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    tape_of({parts.front(), p});
    require_rank(p, 2, "concat_cols");
    if (p.shape()[0] != m) {
      throw DimensionError("concat_cols: row counts differ, " +
                           shape_string(parts.front().shape()) + " vs " + shape_string(p.shape()));
    }
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  Array out(Shape{m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy(pv.row(i).begin(), pv.row(i).end(),
                out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    }
    off += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(
      std::move(out), inputs,
      [inputs, widths, m](Tape& tp, const Array& g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          if (inputs[k].requires_grad()) {
            auto& gp = tp.grad(inputs[k]);
            for (std::size_t i = 0; i < m; ++i) {
              axpy(gp.row(i), g.row(i).subspan(off, widths[k]));
            }
          }
          off += widths[k];
        }
      },
      "concat_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  auto& t = tape_of({parts.front()});
  const std::size_t n = parts.front().shape().at(1);
  std::size_t total = 0;
  for (const auto& p : parts) {
    tape_of({parts.front(), p});
    require_rank(p, 2, "concat_rows");
    if (p.shape()[1] != n) {
      throw DimensionError("concat_rows: column counts differ, " +
                           shape_string(parts.front().shape()) + " vs " + shape_string(p.shape()));
    }
    total += p.shape()[0];
  }
  Array out(Shape{total, n});
  auto it = out.data().begin();
  for (const auto& p : parts) it = std::copy(p.value().data().begin(), p.value().data().end(), it);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(
      std::move(out), inputs,
      [inputs](Tape& tp, const Array& g) {
        std::size_t off = 0;
        for (const auto& p : inputs) {
          const std::size_t len = p.value().size();
          if (p.requires_grad()) axpy(tp.grad(p).values(), g.values().subspan(off, len));
          off += len;
        }
      },
      "concat_rows");
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  auto& t = tape_of({x});
  require_rank(x, 2, "slice_rows");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || begin + count > m) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(x.shape()));
  }
  const auto xv = x.value().values().subspan(begin * n, count * n);
  Array out(Shape{count, n}, std::vector<double>(xv.begin(), xv.end()));
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x, begin, count, n](Tape& tp, const Array& g) {
        axpy(tp.grad(x).values().subspan(begin * n, count * n), g.values());
      },
      "slice_rows");
}

Var gather_rows(Var table, std::span<const std::size_t> index) {
  auto& t = tape_of({table});
  require_rank(table, 2, "gather_rows");
  const std::size_t rows = table.shape()[0], d = table.shape()[1];
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  Array out(Shape{index.size(), d});
  const auto& tv = table.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(index[i]) + " outside table " +
                           shape_string(table.shape()));
    }
    std::copy(tv.row(index[i]).begin(), tv.row(index[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const Var in[] = {table};
  return t.record(
      std::move(out), in,
      [table, idx = std::move(idx)](Tape& tp, const Array& g) {
        auto& gt = tp.grad(table);
        for (std::size_t i = 0; i < idx.size(); ++i) axpy(gt.row(idx[i]), g.row(i));
      },
      "gather_rows");
}

Var pick_cols(Var x, std::span<const std::size_t> index, std::size_t k) {
  auto& t = tape_of({x});
  require_rank(x, 2, "pick_cols");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (k == 0 || index.size() != m * k) {
    throw DimensionError("pick_cols: index of length " + std::to_string(index.size()) +
                         " does not describe " + std::to_string(m) + " rows of " +
                         std::to_string(k));
  }
  Array out(Shape{m, k});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = index[i * k + j];
      if (c >= n) throw DimensionError("pick_cols: column " + std::to_string(c) + " out of range");
      out.at(i, j) = x.value().at(i, c);
    }
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const Var in[] = {x};
  return t.record(
      std::move(out), in,
      [x, m, k, idx = std::move(idx)](Tape& tp, const Array& g) {
        auto& gx = tp.grad(x);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < k; ++j) gx.at(i, idx[i * k + j]) += g.at(i, j);
      },
      "pick_cols");
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
  auto& t = tape_of({logits});
  require_rank(logits, 2, "cross_entropy");
  const std::size_t m = logits.shape()[0], c = logits.shape()[1];
  if (targets.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
  }
  Array probs = logits.value();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] >= c) throw DimensionError("cross_entropy: target outside class range");
    auto r = probs.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    total += lse - r[targets[i]];
    for (auto& v : r) v = std::exp(v - lse);
  }
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  const Var in[] = {logits};
  return t.record(
      Array::scalar(total / static_cast<double>(m)), in,
      [logits, m, probs = std::move(probs), tg = std::move(tg)](Tape& tp, const Array& g) {
        const double f = g[0] / static_cast<double>(m);
        auto& gl = tp.grad(logits);
        for (std::size_t i = 0; i < m; ++i) {
          auto dst = gl.row(i);
          const auto pr = probs.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += f * pr[j];
          dst[tg[i]] -= f;
        }
      },
      "cross_entropy");
}

Var periodic_encode(Var omega, std::span<const double> values) {
  auto& t = tape_of({omega});
  require_rank(omega, 1, "periodic_encode");
  if (values.empty()) throw DimensionError("periodic_encode: no input values");
  const std::size_t k = omega.shape()[0], n = values.size();
  const auto w = omega.value().values();
  Array out(Shape{n, 2 * k});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double a = w[j] * values[i];
      out.at(i, 2 * j) = std::cos(a);
      out.at(i, 2 * j + 1) = std::sin(a);
    }
  }
  std::vector<double> v(values.begin(), values.end());
  Array saved = out;
  const Var in[] = {omega};
  return t.record(
      std::move(out), in,
      [omega, k, v = std::move(v), enc = std::move(saved)](Tape& tp, const Array& g) {
        auto gw = tp.grad(omega).values();
        for (std::size_t i = 0; i < v.size(); ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const double c = enc.at(i, 2 * j), s = enc.at(i, 2 * j + 1);
            gw[j] += v[i] * (c * g.at(i, 2 * j + 1) - s * g.at(i, 2 * j));
          }
        }
      },
      "periodic_encode");
}

Var segment_attention(Var q, Var k, Var v, std::span<const std::size_t> offsets,
                      std::size_t heads) {
  auto& t = tape_of({q, k, v});
  require_rank(q, 2, "segment_attention");
  require_rank(k, 2, "segment_attention");
  require_rank(v, 2, "segment_attention");
  require_same_shape(k, v, "segment_attention");
  const std::size_t m = q.shape()[0], d = q.shape()[1], total = k.shape()[0];
  if (k.shape()[1] != d) {
    throw DimensionError("segment_attention: query " + shape_string(q.shape()) + " vs key " +
                         shape_string(k.shape()));
  }
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != total) {
    throw DimensionError("segment_attention: offsets must run from 0 to the key count");
  }
  const std::size_t segs = offsets.size() - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    if (offsets[s + 1] <= offsets[s]) throw ContractError("segment_attention: empty segment");
  }
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();

  // canonical key order per segment
  std::vector<std::size_t> order(total);
  for (std::size_t s = 0; s < segs; ++s) {
    const auto b = order.begin() + static_cast<std::ptrdiff_t>(offsets[s]);
    const auto e = order.begin() + static_cast<std::ptrdiff_t>(offsets[s + 1]);
    std::iota(b, e, offsets[s]);
    std::sort(b, e, [&](std::size_t x, std::size_t y) {
      const auto kx = kv.row(x), ky = kv.row(y);
      for (std::size_t c = 0; c < d; ++c) {
        if (kx[c] != ky[c]) return kx[c] < ky[c];
      }
      const auto vx = vv.row(x), vy = vv.row(y);
      for (std::size_t c = 0; c < d; ++c) {
        if (vx[c] != vy[c]) return vx[c] < vy[c];
      }
      return false;
    });
  }

  // probs laid out [segment][head][query row][key in canonical order]
  std::vector<std::size_t> prob_off(segs + 1, 0);
  for (std::size_t s = 0; s < segs; ++s) {
    prob_off[s + 1] = prob_off[s] + heads * m * (offsets[s + 1] - offsets[s]);
  }
  std::vector<double> probs(prob_off.back());
  Array out(Shape{segs * m, d});
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t n = offsets[s + 1] - offsets[s];
    const std::size_t* ord = order.data() + offsets[s];
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < m; ++i) {
        double* p = probs.data() + prob_off[s] + (h * m + i) * n;
        const double* qi = qv.data().data() + i * d + c0;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const double* kj = kv.data().data() + ord[j] * d + c0;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          p[j] = dot * sc;
          mx = std::max(mx, p[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          p[j] = std::exp(p[j] - mx);
          z += p[j];
        }
        for (std::size_t j = 0; j < n; ++j) p[j] /= z;
        double* oi = out.data().data() + (s * m + i) * d + c0;
        for (std::size_t j = 0; j < n; ++j) {
          const double* vj = vv.data().data() + ord[j] * d + c0;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
        }
      }
    }
  }

  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  const Var in[] = {q, k, v};
  return t.record(
      std::move(out), in,
      [q, k, v, m, d, dh, heads, sc, offs = std::move(offs), order = std::move(order),
       probs = std::move(probs), prob_off = std::move(prob_off)](Tape& tp, const Array& g) {
        const bool need_q = q.requires_grad(), need_k = k.requires_grad(),
                   need_v = v.requires_grad();
        Array* gq = need_q ? &tp.grad(q) : nullptr;
        Array* gk = need_k ? &tp.grad(k) : nullptr;
        Array* gv = need_v ? &tp.grad(v) : nullptr;
        const double* qd = q.value().data().data();
        const double* kd = k.value().data().data();
        const double* vd = v.value().data().data();
        std::vector<double> dp;
        for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
          const std::size_t n = offs[s + 1] - offs[s];
          const std::size_t* ord = order.data() + offs[s];
          dp.resize(n);
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * dh;
            for (std::size_t i = 0; i < m; ++i) {
              const double* p = probs.data() + prob_off[s] + (h * m + i) * n;
              const double* gi = g.data().data() + (s * m + i) * d + c0;
              double dot = 0.0;
              for (std::size_t j = 0; j < n; ++j) {
                const double* vj = vd + ord[j] * d + c0;
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c) acc += gi[c] * vj[c];
                dp[j] = acc;
                dot += p[j] * acc;
                if (gv) {
                  double* gvj = gv->data().data() + ord[j] * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * gi[c];
                }
              }
              const double* qi = qd + i * d + c0;
              double* gqi = gq ? gq->data().data() + i * d + c0 : nullptr;
              for (std::size_t j = 0; j < n; ++j) {
                const double ds = p[j] * (dp[j] - dot) * sc;
                if (ds == 0.0) continue;
                if (gqi) {
                  const double* kj = kd + ord[j] * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                }
                if (gk) {
                  double* gkj = gk->data().data() + ord[j] * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      },
      "segment_attention");
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var multi_head_attention(Var query, Var key, Var value, std::size_t heads,
                         const AttentionWeights& w) {
  const std::size_t offsets[] = {0, key.shape().at(0)};
  return multi_head_attention(query, key, value, offsets, heads, w);
}

Var multi_head_attention(Var query, Var key, Var value, std::span<const std::size_t> offsets,
                         std::size_t heads, const AttentionWeights& w) {
  if (heads == 0 || query.shape().at(1) % heads != 0) {
    throw ConfigError("attention width " + std::to_string(query.shape().at(1)) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  auto q = linear(query, w.wq, w.bq);
  auto k = linear(key, w.wk, w.bk);
  auto v = linear(value, w.wv, w.bv);
  return linear(segment_attention(q, k, v, offsets, heads), w.wo, w.bo);
}

Var feed_forward(Var x, Var w1, Var b1, Var w2, Var b2) {
  return linear(relu(linear(x, w1, b1)), w2, b2);
}

}  // namespace cstte::num
