#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cstte/numcore/tape.hpp"

// Differentiable operators. Every function records its result on the tape
// owning its inputs; all inputs of one call must share a tape. Matrices are
// rank-2 row-major, vectors rank-1, scalars rank-0.

namespace cstte::num {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// x [m×n] + bias [n], bias broadcast over rows.
Var add_row(Var x, Var bias);
/// Stacks `times` copies of x [m×n] vertically: [times·m × n].
Var tile_rows(Var x, std::size_t times);

Var relu(Var x);
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var l2_normalize_rows(Var x, double eps = 1e-12);

Var sum(Var x);
Var mean(Var x);
Var reshape(Var x, Shape shape);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);

/// Rows `index` of table [R×d] → [n×d]; backward scatter-adds.
Var gather_rows(Var table, std::span<const std::size_t> index);
/// out(i, j) = x(i, index[i·k + j]) for x [m×n] → [m×k].
Var pick_cols(Var x, std::span<const std::size_t> index, std::size_t k);

/// Mean negative log-likelihood of `targets` under row-wise softmax of
/// logits [m×C]. Uses a max-shifted log-sum-exp.
Var cross_entropy(Var logits, std::span<const std::size_t> targets);

/// Trigonometric encoding with learnable frequencies omega [k]:
/// out(i, 2j) = cos(omega_j·v_i), out(i, 2j+1) = sin(omega_j·v_i); [n × 2k].
Var periodic_encode(Var omega, std::span<const double> values);

/// Multi-head scaled dot-product attention of one shared query block
/// q [M×d] over S key/value segments. Segment s spans rows
/// [offsets[s], offsets[s+1]) of k and v [T×d]; the result stacks the S
/// attended blocks: [S·M × d]. Keys are reduced in a canonical order
/// (lexicographic on key/value rows) so the output does not depend on the
/// order of rows within a segment, bit for bit.
Var segment_attention(Var q, Var k, Var v, std::span<const std::size_t> offsets, std::size_t heads);

// Composite layers.

Var linear(Var x, Var weight, Var bias);

struct AttentionWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Att(query, key, value): projections, per-head attention, output projection.
Var multi_head_attention(Var query, Var key, Var value, std::size_t heads,
                         const AttentionWeights& w);
/// Same over S segments of key/value rows sharing one query block.
Var multi_head_attention(Var query, Var key, Var value, std::span<const std::size_t> offsets,
                         std::size_t heads, const AttentionWeights& w);

/// Second affine of a rectified first affine.
Var feed_forward(Var x, Var w1, Var b1, Var w2, Var b2);

}  // namespace cstte::num
