#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ewpf/forecaster.hpp"

namespace ewpf {

struct RecurrentConfig {
    int hidden = 512;
    int layers = 8;
    ModelKind cell = ModelKind::lstm;  // lstm or gru
    int horizon = 1;
    int seq_len = 10;
    int input_features = 1;

    void validate() const;  // throws ConfigError
};

// Per-layer gate weights. W: [input_dim x hidden], U: [hidden x hidden],
// b: [hidden]; layer 0 has input_dim = input_features, deeper layers hidden.
struct LstmLayerWeights {
    Tensor w_i, u_i, b_i;  // input gate
    Tensor w_f, u_f, b_f;  // forget gate
    Tensor w_g, u_g, b_g;  // cell candidate
    Tensor w_o, u_o, b_o;  // output gate
};

struct GruLayerWeights {
    Tensor w_z, u_z, b_z;  // update gate
    Tensor w_r, u_r, b_r;  // reset gate
    Tensor w_h, u_h, b_h;  // candidate
};

// i,f,o = sigmoid gates; g = tanh candidate; c = f*c_prev + i*g; h = o*tanh(c)
std::pair<Tensor, Tensor> lstm_cell_step(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                                         const Tensor& c_prev, const LstmLayerWeights& w);

// z,r = sigmoid gates; hc = tanh(W x + U (r*h_prev) + b); h = (1-z)*h_prev + z*hc
// (reset gate applied to h_prev before the U matmul)
Tensor gru_cell_step(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                     const GruLayerWeights& w);

ModelParameters init_recurrent_parameters(const RecurrentConfig& cfg, uint64_t seed);

// Stacked LSTM/GRU unrolled over the window; the final top-layer hidden state
// feeds a linear head that emits all horizon steps at once.
class RecurrentModel final : public Forecaster {
public:
    RecurrentModel(RecurrentConfig cfg, uint64_t seed);
    RecurrentModel(RecurrentConfig cfg, ModelParameters params);

    Tensor forward(Tape& tape, const Tensor& window, bool training, Rng& rng) override;

    ModelParameters& parameters() override { return params_; }
    const ModelParameters& parameters() const override { return params_; }
    ModelKind kind() const override { return cfg_.cell; }
    int seq_len() const override { return cfg_.seq_len; }
    int horizon() const override { return cfg_.horizon; }

    const RecurrentConfig& config() const { return cfg_; }

private:
    void bind_views();

    RecurrentConfig cfg_;
    ModelParameters params_;
    std::vector<LstmLayerWeights> lstm_layers_;
    std::vector<GruLayerWeights> gru_layers_;
    Tensor head_weight_;  // [hidden x horizon]
    Tensor head_bias_;    // [horizon]
};

}  // namespace ewpf
