#include "ewpf/model.hpp"

#include <cmath>
#include <iostream>
#include <string>

namespace ewpf {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::transformer: return "transformer";
        case ModelKind::lstm: return "lstm";
        case ModelKind::gru: return "gru";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "transformer") return ModelKind::transformer;
    if (s == "lstm") return ModelKind::lstm;
    if (s == "gru") return ModelKind::gru;
    throw ConfigError("unknown model kind: " + s + " (expected transformer|lstm|gru)");
}

void TransformerConfig::validate() const {
    if (d_model < 2 || d_model % 2 != 0) {
        throw ConfigError("d_model must be even and >= 2, got " + std::to_string(d_model));
    }
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ConfigError("n_heads " + std::to_string(n_heads) + " must divide d_model " +
                          std::to_string(d_model));
    }
    if (n_layers < 0) throw ConfigError("n_layers must be >= 0");
    if (d_ff < 1) throw ConfigError("d_ff must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
        throw ConfigError("dropout must be in [0, 1), got " + std::to_string(dropout_p));
    }
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (input_features < 1 || output_features < 1) {
        throw ConfigError("feature counts must be >= 1");
    }
    if (tie_embeddings && input_features != output_features) {
        throw ConfigError("tied embeddings require input_features == output_features");
    }
    if (eps_layernorm <= 0.0) throw ConfigError("eps_layernorm must be > 0");
}

PositionalEncoding positional_encoding(int max_len, int d_model) {
    if (d_model < 2 || d_model % 2 != 0) {
        throw ConfigError("positional encoding pairs sin/cos and needs an even d_model, got " +
                          std::to_string(d_model));
    }
    if (max_len < 1) throw ContractError("positional encoding needs max_len >= 1");
    std::vector<double> table(static_cast<size_t>(max_len) * d_model);
    for (int pos = 0; pos < max_len; ++pos) {
        for (int i = 0; i * 2 < d_model; ++i) {
            const double denom = std::pow(10000.0, (2.0 * i) / d_model);
            const double angle = pos / denom;
            table[static_cast<size_t>(pos) * d_model + 2 * i] = std::sin(angle);
            table[static_cast<size_t>(pos) * d_model + 2 * i + 1] = std::cos(angle);
        }
    }
    PositionalEncoding pe;
    pe.max_len = max_len;
    pe.d_model = d_model;
    pe.table = Tensor::from_vector({max_len, d_model}, std::move(table));
    return pe;
}

Tensor pe_slice(const PositionalEncoding& pe, int len) {
    if (len < 1 || len > pe.max_len) {
        throw ContractError("requested " + std::to_string(len) +
                            " positional-encoding rows, table has " + std::to_string(pe.max_len));
    }
    auto src = pe.table.data();
    std::vector<double> rows(src.begin(), src.begin() + static_cast<size_t>(len) * pe.d_model);
    return Tensor::from_vector({len, pe.d_model}, std::move(rows));
}

Tensor embed(Tape& tape, const Tensor& window, const Tensor& proj, const PositionalEncoding& pe,
             double dropout_p, bool training, Rng& rng) {
    const int len = window.rows();
    if (len > pe.max_len) {
        throw ContractError("window length " + std::to_string(len) +
                            " exceeds positional-encoding table length " +
                            std::to_string(pe.max_len));
    }
    Tensor x = matmul(tape, window, proj);
    x = scale(tape, x, std::sqrt(static_cast<double>(proj.cols())));
    x = add(tape, x, pe_slice(pe, len));
    return dropout(tape, x, dropout_p, training, rng);
}

Tensor ffn_forward(Tape& tape, const Tensor& x, const Tensor& w1, const Tensor& b1,
                   const Tensor& w2, const Tensor& b2) {
    Tensor hidden = relu(tape, add_rowwise(tape, matmul(tape, x, w1), b1));
    return add_rowwise(tape, matmul(tape, hidden, w2), b2);
}

Tensor encoder_forward(Tape& tape, Tensor x, const std::vector<EncoderBlockWeights>& blocks,
                       const TransformerConfig& cfg, bool training, Rng& rng) {
    for (const auto& blk : blocks) {
        Tensor attn = multi_head_attention(tape, x, x, blk.self_attn, nullptr, cfg.dropout_p,
                                           training, rng);
        x = layer_norm(tape, add(tape, x, attn), blk.ln1_gain, blk.ln1_bias, cfg.eps_layernorm);
        Tensor ff = ffn_forward(tape, x, blk.ffn_w1, blk.ffn_b1, blk.ffn_w2, blk.ffn_b2);
        x = layer_norm(tape, add(tape, x, ff), blk.ln2_gain, blk.ln2_bias, cfg.eps_layernorm);
    }
    return x;
}

Tensor decoder_forward(Tape& tape, Tensor queries, const Tensor& memory,
                       const std::vector<DecoderBlockWeights>& blocks,
                       const TransformerConfig& cfg, bool training, Rng& rng) {
    if (blocks.empty()) return queries;
    const AttentionMask mask = causal_mask(queries.rows());
    for (const auto& blk : blocks) {
        Tensor self = multi_head_attention(tape, queries, queries, blk.self_attn, &mask,
                                           cfg.dropout_p, training, rng);
        queries = layer_norm(tape, add(tape, queries, self), blk.ln1_gain, blk.ln1_bias,
                             cfg.eps_layernorm);
        Tensor cross = multi_head_attention(tape, queries, memory, blk.cross_attn, nullptr,
                                            cfg.dropout_p, training, rng);
        queries = layer_norm(tape, add(tape, queries, cross), blk.ln2_gain, blk.ln2_bias,
                             cfg.eps_layernorm);
        Tensor ff = ffn_forward(tape, queries, blk.ffn_w1, blk.ffn_b1, blk.ffn_w2, blk.ffn_b2);
        queries = layer_norm(tape, add(tape, queries, ff), blk.ln3_gain, blk.ln3_bias,
                             cfg.eps_layernorm);
    }
    return queries;
}

namespace {

Tensor normal_init(Shape shape, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data_mut()) v = rng.normal(0.0, 0.02);
    return t;
}

void add_attention_params(ModelParameters& p, const std::string& prefix, int d_model, Rng& rng) {
    p.add(prefix + ".w_q", normal_init({d_model, d_model}, rng));
    p.add(prefix + ".w_k", normal_init({d_model, d_model}, rng));
    p.add(prefix + ".w_v", normal_init({d_model, d_model}, rng));
    p.add(prefix + ".w_o", normal_init({d_model, d_model}, rng));
}

void add_ffn_params(ModelParameters& p, const std::string& prefix, const TransformerConfig& cfg,
                    Rng& rng) {
    p.add(prefix + ".ffn.w1", normal_init({cfg.d_model, cfg.d_ff}, rng));
    p.add(prefix + ".ffn.b1", Tensor::zeros({cfg.d_ff}));
    p.add(prefix + ".ffn.w2", normal_init({cfg.d_ff, cfg.d_model}, rng));
    p.add(prefix + ".ffn.b2", Tensor::zeros({cfg.d_model}));
}

void add_layernorm_params(ModelParameters& p, const std::string& prefix, int d_model) {
    p.add(prefix + ".gain", Tensor::full({d_model}, 1.0));
    p.add(prefix + ".bias", Tensor::zeros({d_model}));
}

MultiHeadWeights attention_view(const ModelParameters& p, const std::string& prefix, int n_heads) {
    return MultiHeadWeights::from(p.get(prefix + ".w_q"), p.get(prefix + ".w_k"),
                                  p.get(prefix + ".w_v"), p.get(prefix + ".w_o"), n_heads);
}

}  // namespace

ModelParameters init_transformer_parameters(const TransformerConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParameters p;
    p.add("embed.proj", normal_init({cfg.input_features, cfg.d_model}, rng));
    p.add("query_tokens", normal_init({cfg.horizon, cfg.d_model}, rng));
    for (int i = 0; i < cfg.n_layers; ++i) {
        const std::string enc = "encoder." + std::to_string(i);
        add_attention_params(p, enc + ".attn", cfg.d_model, rng);
        add_ffn_params(p, enc, cfg, rng);
        add_layernorm_params(p, enc + ".ln1", cfg.d_model);
        add_layernorm_params(p, enc + ".ln2", cfg.d_model);
    }
    for (int i = 0; i < cfg.n_layers; ++i) {
        const std::string dec = "decoder." + std::to_string(i);
        add_attention_params(p, dec + ".self_attn", cfg.d_model, rng);
        add_attention_params(p, dec + ".cross_attn", cfg.d_model, rng);
        add_ffn_params(p, dec, cfg, rng);
        add_layernorm_params(p, dec + ".ln1", cfg.d_model);
        add_layernorm_params(p, dec + ".ln2", cfg.d_model);
        add_layernorm_params(p, dec + ".ln3", cfg.d_model);
    }
    if (!cfg.tie_embeddings) {
        p.add("head.weight", normal_init({cfg.d_model, cfg.output_features}, rng));
    }
    p.add("head.bias", Tensor::zeros({cfg.output_features}));
    return p;
}

TransformerModel::TransformerModel(TransformerConfig cfg, uint64_t seed)
    : TransformerModel(cfg, init_transformer_parameters(cfg, seed)) {}

TransformerModel::TransformerModel(TransformerConfig cfg, ModelParameters params)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    pe_ = positional_encoding(std::max(cfg_.seq_len, cfg_.horizon), cfg_.d_model);
    bind_views();
}

void TransformerModel::bind_views() {
    embed_proj_ = params_.get("embed.proj");
    query_tokens_ = params_.get("query_tokens");
    for (int i = 0; i < cfg_.n_layers; ++i) {
        const std::string enc = "encoder." + std::to_string(i);
        EncoderBlockWeights blk;
        blk.self_attn = attention_view(params_, enc + ".attn", cfg_.n_heads);
        blk.ffn_w1 = params_.get(enc + ".ffn.w1");
        blk.ffn_b1 = params_.get(enc + ".ffn.b1");
        blk.ffn_w2 = params_.get(enc + ".ffn.w2");
        blk.ffn_b2 = params_.get(enc + ".ffn.b2");
        blk.ln1_gain = params_.get(enc + ".ln1.gain");
        blk.ln1_bias = params_.get(enc + ".ln1.bias");
        blk.ln2_gain = params_.get(enc + ".ln2.gain");
        blk.ln2_bias = params_.get(enc + ".ln2.bias");
        encoder_blocks_.push_back(std::move(blk));
    }
    for (int i = 0; i < cfg_.n_layers; ++i) {
        const std::string dec = "decoder." + std::to_string(i);
        DecoderBlockWeights blk;
        blk.self_attn = attention_view(params_, dec + ".self_attn", cfg_.n_heads);
        blk.cross_attn = attention_view(params_, dec + ".cross_attn", cfg_.n_heads);
        blk.ffn_w1 = params_.get(dec + ".ffn.w1");
        blk.ffn_b1 = params_.get(dec + ".ffn.b1");
        blk.ffn_w2 = params_.get(dec + ".ffn.w2");
        blk.ffn_b2 = params_.get(dec + ".ffn.b2");
        blk.ln1_gain = params_.get(dec + ".ln1.gain");
        blk.ln1_bias = params_.get(dec + ".ln1.bias");
        blk.ln2_gain = params_.get(dec + ".ln2.gain");
        blk.ln2_bias = params_.get(dec + ".ln2.bias");
        blk.ln3_gain = params_.get(dec + ".ln3.gain");
        blk.ln3_bias = params_.get(dec + ".ln3.bias");
        decoder_blocks_.push_back(std::move(blk));
    }
    if (!cfg_.tie_embeddings) head_weight_ = params_.get("head.weight");
    head_bias_ = params_.get("head.bias");
}

Tensor TransformerModel::forward(Tape& tape, const Tensor& window, bool training, Rng& rng) {
    if (window.rank() != 2 || window.rows() != cfg_.seq_len ||
        window.cols() != cfg_.input_features) {
        throw ContractError("transformer forward: window must be " + std::to_string(cfg_.seq_len) +
                            "x" + std::to_string(cfg_.input_features) + ", got " +
                            shape_to_string(window.shape()));
    }
    if (!warned_unnormalized_) {
        for (double v : window.data()) {
            if (v < -1.0 - 1e-6 || v > 1.0 + 1e-6) {
                std::cerr << "ewpf: warning: input window value " << v
                          << " outside [-1, 1]; expected min-max normalized input\n";
                warned_unnormalized_ = true;
                break;
            }
        }
    }
    Tensor x = embed(tape, window, embed_proj_, pe_, cfg_.dropout_p, training, rng);
    Tensor memory = encoder_forward(tape, x, encoder_blocks_, cfg_, training, rng);
    Tensor queries = add(tape, query_tokens_, pe_slice(pe_, cfg_.horizon));
    Tensor decoded = decoder_forward(tape, queries, memory, decoder_blocks_, cfg_, training, rng);
    Tensor w_out = cfg_.tie_embeddings ? transpose(tape, embed_proj_) : head_weight_;
    return add_rowwise(tape, matmul(tape, decoded, w_out), head_bias_);
}

}  // namespace ewpf
