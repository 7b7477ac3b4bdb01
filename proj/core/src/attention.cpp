#include "ewpf/attention.hpp"

#include <cmath>
#include <string>

namespace ewpf {

namespace {
// Large enough that adding any realistic logit is absorbed, small enough to
// stay finite; exp() of it underflows to exactly 0 after max subtraction.
constexpr double kMaskBias = -1e30;
}  // namespace

AttentionMask causal_mask(int n) {
    if (n < 1) throw ContractError("causal_mask: n must be >= 1, got " + std::to_string(n));
    AttentionMask m;
    m.rows = n;
    m.cols = n;
    m.allowed.assign(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) m.allowed[static_cast<size_t>(i) * n + j] = 1;
    return m;
}

MultiHeadWeights MultiHeadWeights::from(Tensor w_q, Tensor w_k, Tensor w_v, Tensor w_o,
                                        int n_heads) {
    const int d_model = w_q.cols();
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ConfigError("multi-head attention: n_heads " + std::to_string(n_heads) +
                          " must divide d_model " + std::to_string(d_model));
    }
    MultiHeadWeights w;
    w.w_q = std::move(w_q);
    w.w_k = std::move(w_k);
    w.w_v = std::move(w_v);
    w.w_o = std::move(w_o);
    w.n_heads = n_heads;
    w.d_k = d_model / n_heads;
    w.d_v = d_model / n_heads;
    return w;
}

int64_t MultiHeadWeights::scalar_count() const {
    return static_cast<int64_t>(w_q.size()) + w_k.size() + w_v.size() + w_o.size();
}

std::pair<Tensor, Tensor> scaled_dot_product_attention(Tape& tape, const Tensor& q,
                                                       const Tensor& k, const Tensor& v,
                                                       const AttentionMask* mask) {
    const int l_q = q.rows(), d_k = q.cols();
    const int l_k = k.rows();
    if (k.cols() != d_k) {
        throw DimensionError("attention: q and k disagree on d_k, " + shape_to_string(q.shape()) +
                             " vs " + shape_to_string(k.shape()));
    }
    if (v.rows() != l_k) {
        throw DimensionError("attention: k and v disagree on key count, " +
                             shape_to_string(k.shape()) + " vs " + shape_to_string(v.shape()));
    }
    if (mask) {
        if (mask->rows != l_q || mask->cols != l_k) {
            throw DimensionError("attention: mask is " + std::to_string(mask->rows) + "x" +
                                 std::to_string(mask->cols) + ", expected " + std::to_string(l_q) +
                                 "x" + std::to_string(l_k));
        }
        for (int i = 0; i < l_q; ++i) {
            bool any = false;
            for (int j = 0; j < l_k && !any; ++j) any = mask->is_allowed(i, j);
            if (!any) {
                throw ContractError("attention: query row " + std::to_string(i) +
                                    " has no allowed keys");
            }
        }
    }

    Tensor logits = scale(tape, matmul(tape, q, transpose(tape, k)), 1.0 / std::sqrt(d_k));
    if (mask) {
        std::vector<double> bias(static_cast<size_t>(l_q) * l_k, 0.0);
        for (int i = 0; i < l_q; ++i)
            for (int j = 0; j < l_k; ++j)
                if (!mask->is_allowed(i, j)) bias[static_cast<size_t>(i) * l_k + j] = kMaskBias;
        logits = add(tape, logits, Tensor::from_vector({l_q, l_k}, std::move(bias)));
    }
    Tensor weights = softmax_lastdim(tape, logits);
    Tensor out = matmul(tape, weights, v);
    return {out, weights};
}

Tensor multi_head_attention(Tape& tape, const Tensor& x_q, const Tensor& x_kv,
                            const MultiHeadWeights& w, const AttentionMask* mask,
                            double dropout_p, bool training, Rng& rng) {
    const int d_model = w.w_q.rows();
    if (x_q.cols() != d_model || x_kv.cols() != d_model) {
        throw DimensionError("multi_head_attention: inputs must have last dimension " +
                             std::to_string(d_model) + ", got " + shape_to_string(x_q.shape()) +
                             " and " + shape_to_string(x_kv.shape()));
    }
    Tensor q_all = matmul(tape, x_q, w.w_q);
    Tensor k_all = matmul(tape, x_kv, w.w_k);
    Tensor v_all = matmul(tape, x_kv, w.w_v);

    std::vector<Tensor> heads;
    heads.reserve(static_cast<size_t>(w.n_heads));
    for (int h = 0; h < w.n_heads; ++h) {
        Tensor q_h = slice_cols(tape, q_all, h * w.d_k, w.d_k);
        Tensor k_h = slice_cols(tape, k_all, h * w.d_k, w.d_k);
        Tensor v_h = slice_cols(tape, v_all, h * w.d_v, w.d_v);
        heads.push_back(scaled_dot_product_attention(tape, q_h, k_h, v_h, mask).first);
    }
    Tensor concat = w.n_heads == 1 ? heads[0] : concat_cols(tape, heads);
    Tensor out = matmul(tape, concat, w.w_o);
    return dropout(tape, out, dropout_p, training, rng);
}

}  // namespace ewpf
