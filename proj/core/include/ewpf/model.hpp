#pragma once

#include <cstdint>
#include <vector>

#include "ewpf/attention.hpp"
#include "ewpf/forecaster.hpp"

namespace ewpf {

struct TransformerConfig {
    int d_model = 512;
    int n_heads = 8;
    int n_layers = 8;  // encoder and decoder stack depth
    int d_ff = 2048;
    double dropout_p = 0.1;
    int input_features = 1;
    int output_features = 1;
    int horizon = 1;   // 1 (single-step) or 5 (multi-step)
    int seq_len = 10;  // 10 / 20 / 50 in the benchmark grid
    bool tie_embeddings = true;
    double eps_layernorm = 1e-5;
    // When false (default) the training loss covers all horizon steps; when
    // true it is restricted to the final step (ablation).
    bool loss_final_step_only = false;

    void validate() const;  // throws ConfigError
};

// Fixed sinusoidal table: table[pos][2i] = sin(pos / 10000^(2i/d_model)),
// table[pos][2i+1] = cos(pos / 10000^(2i/d_model)).
struct PositionalEncoding {
    int max_len = 0;
    int d_model = 0;
    Tensor table;  // [max_len x d_model], constant
};

PositionalEncoding positional_encoding(int max_len, int d_model);

// Constant tensor holding rows [0, len) of the table.
Tensor pe_slice(const PositionalEncoding& pe, int len);

// (window * proj) * sqrt(d_model) + PE rows, then dropout.
Tensor embed(Tape& tape, const Tensor& window, const Tensor& proj, const PositionalEncoding& pe,
             double dropout_p, bool training, Rng& rng);

struct EncoderBlockWeights {
    MultiHeadWeights self_attn;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Tensor ln1_gain, ln1_bias;  // after self-attention sublayer
    Tensor ln2_gain, ln2_bias;  // after FFN sublayer
};

struct DecoderBlockWeights {
    MultiHeadWeights self_attn;
    MultiHeadWeights cross_attn;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Tensor ln1_gain, ln1_bias;  // after masked self-attention
    Tensor ln2_gain, ln2_bias;  // after cross-attention
    Tensor ln3_gain, ln3_bias;  // after FFN
};

// max(0, x W1 + b1) W2 + b2
Tensor ffn_forward(Tape& tape, const Tensor& x, const Tensor& w1, const Tensor& b1,
                   const Tensor& w2, const Tensor& b2);

// Post-norm residual blocks: x <- LayerNorm(x + Sublayer(x)).
Tensor encoder_forward(Tape& tape, Tensor x, const std::vector<EncoderBlockWeights>& blocks,
                       const TransformerConfig& cfg, bool training, Rng& rng);

// Decoder blocks add causal self-attention over the queries and unmasked
// cross-attention over the encoder memory before the FFN sublayer.
Tensor decoder_forward(Tape& tape, Tensor queries, const Tensor& memory,
                       const std::vector<DecoderBlockWeights>& blocks,
                       const TransformerConfig& cfg, bool training, Rng& rng);

// All weights ~ N(0, 0.02^2); layer-norm gains 1; biases 0.
ModelParameters init_transformer_parameters(const TransformerConfig& cfg, uint64_t seed);

class TransformerModel final : public Forecaster {
public:
    TransformerModel(TransformerConfig cfg, uint64_t seed);
    TransformerModel(TransformerConfig cfg, ModelParameters params);

    Tensor forward(Tape& tape, const Tensor& window, bool training, Rng& rng) override;

    ModelParameters& parameters() override { return params_; }
    const ModelParameters& parameters() const override { return params_; }
    ModelKind kind() const override { return ModelKind::transformer; }
    int seq_len() const override { return cfg_.seq_len; }
    int horizon() const override { return cfg_.horizon; }
    bool restrict_loss_to_final_step() const override { return cfg_.loss_final_step_only; }

    const TransformerConfig& config() const { return cfg_; }
    const PositionalEncoding& pe() const { return pe_; }
    const std::vector<EncoderBlockWeights>& encoder_blocks() const { return encoder_blocks_; }
    const std::vector<DecoderBlockWeights>& decoder_blocks() const { return decoder_blocks_; }

private:
    void bind_views();

    TransformerConfig cfg_;
    ModelParameters params_;
    PositionalEncoding pe_;
    std::vector<EncoderBlockWeights> encoder_blocks_;
    std::vector<DecoderBlockWeights> decoder_blocks_;
    Tensor embed_proj_;   // [input_features x d_model]
    Tensor query_tokens_; // [horizon x d_model]
    Tensor head_weight_;  // [d_model x output_features], absent when tied
    Tensor head_bias_;    // [output_features]
    bool warned_unnormalized_ = false;
};

}  // namespace ewpf
