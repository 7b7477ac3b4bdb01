#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ewpf/tensor.hpp"

namespace ewpf {

// Boolean attention mask over [queries x keys]. allowed[i*cols + j] says
// whether query i may attend to key j.
struct AttentionMask {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> allowed;

    bool is_allowed(int i, int j) const {
        return allowed[static_cast<size_t>(i) * cols + j] != 0;
    }
};

// Lower-triangular mask: position i attends to positions j <= i.
AttentionMask causal_mask(int n);

// Learned projections for one multi-head attention layer. Per-head blocks are
// stored fused, one d_model x d_model matrix per role, sliced by head; this is
// semantically identical to h separate d_model x d_k matrices.
struct MultiHeadWeights {
    Tensor w_q, w_k, w_v;  // [d_model x d_model]
    Tensor w_o;            // [h*d_v x d_model] == [d_model x d_model]
    int n_heads = 1;
    int d_k = 0;
    int d_v = 0;

    static MultiHeadWeights from(Tensor w_q, Tensor w_k, Tensor w_v, Tensor w_o, int n_heads);
    int64_t scalar_count() const;
};

// softmax(q k^T / sqrt(d_k) + mask_bias) v. Disallowed positions get a -1e30
// additive bias before the softmax, so their weights and gradients are exactly
// zero. Returns (output, attention weights).
std::pair<Tensor, Tensor> scaled_dot_product_attention(Tape& tape, const Tensor& q,
                                                       const Tensor& k, const Tensor& v,
                                                       const AttentionMask* mask = nullptr);

// Concat(head_1..head_h) W_o with per-head slices of the fused projections,
// followed by dropout on the projected output.
Tensor multi_head_attention(Tape& tape, const Tensor& x_q, const Tensor& x_kv,
                            const MultiHeadWeights& w, const AttentionMask* mask,
                            double dropout_p, bool training, Rng& rng);

}  // namespace ewpf
