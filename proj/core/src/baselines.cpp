#include "ewpf/baselines.hpp"

#include <string>

namespace ewpf {

void RecurrentConfig::validate() const {
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (cell != ModelKind::lstm && cell != ModelKind::gru) {
        throw ConfigError("recurrent cell must be lstm or gru");
    }
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (input_features < 1) throw ConfigError("input_features must be >= 1");
}

namespace {

// x [1 x in] W [in x H] + h [1 x H] U [H x H] + b [H]
Tensor gate_preact(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& w, const Tensor& u,
                   const Tensor& b) {
    return add_rowwise(tape, add(tape, matmul(tape, x, w), matmul(tape, h, u)), b);
}

Tensor normal_init(Shape shape, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data_mut()) v = rng.normal(0.0, 0.02);
    return t;
}

void add_gate(ModelParameters& p, const std::string& layer_prefix, const std::string& gate,
              int in_dim, int hidden, Rng& rng) {
    p.add(layer_prefix + "w_" + gate, normal_init({in_dim, hidden}, rng));
    p.add(layer_prefix + "u_" + gate, normal_init({hidden, hidden}, rng));
    p.add(layer_prefix + "b_" + gate, Tensor::zeros({hidden}));
}

}  // namespace

std::pair<Tensor, Tensor> lstm_cell_step(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                                         const Tensor& c_prev, const LstmLayerWeights& w) {
    Tensor i = sigmoid(tape, gate_preact(tape, x_t, h_prev, w.w_i, w.u_i, w.b_i));
    Tensor f = sigmoid(tape, gate_preact(tape, x_t, h_prev, w.w_f, w.u_f, w.b_f));
    Tensor g = tanh_op(tape, gate_preact(tape, x_t, h_prev, w.w_g, w.u_g, w.b_g));
    Tensor o = sigmoid(tape, gate_preact(tape, x_t, h_prev, w.w_o, w.u_o, w.b_o));
    Tensor c = add(tape, mul(tape, f, c_prev), mul(tape, i, g));
    Tensor h = mul(tape, o, tanh_op(tape, c));
    return {h, c};
}

Tensor gru_cell_step(Tape& tape, const Tensor& x_t, const Tensor& h_prev,
                     const GruLayerWeights& w) {
    Tensor z = sigmoid(tape, gate_preact(tape, x_t, h_prev, w.w_z, w.u_z, w.b_z));
    Tensor r = sigmoid(tape, gate_preact(tape, x_t, h_prev, w.w_r, w.u_r, w.b_r));
    Tensor reset_h = mul(tape, r, h_prev);
    Tensor candidate = tanh_op(
        tape, add_rowwise(tape, add(tape, matmul(tape, x_t, w.w_h), matmul(tape, reset_h, w.u_h)),
                          w.b_h));
    Tensor keep = sub(tape, Tensor::full(z.shape(), 1.0), z);
    return add(tape, mul(tape, keep, h_prev), mul(tape, z, candidate));
}

ModelParameters init_recurrent_parameters(const RecurrentConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParameters p;
    const std::string stem = to_string(cfg.cell) + ".";
    for (int l = 0; l < cfg.layers; ++l) {
        const int in_dim = l == 0 ? cfg.input_features : cfg.hidden;
        const std::string prefix = stem + std::to_string(l) + ".";
        if (cfg.cell == ModelKind::lstm) {
            add_gate(p, prefix, "i", in_dim, cfg.hidden, rng);
            add_gate(p, prefix, "f", in_dim, cfg.hidden, rng);
            add_gate(p, prefix, "g", in_dim, cfg.hidden, rng);
            add_gate(p, prefix, "o", in_dim, cfg.hidden, rng);
        } else {
            add_gate(p, prefix, "z", in_dim, cfg.hidden, rng);
            add_gate(p, prefix, "r", in_dim, cfg.hidden, rng);
            add_gate(p, prefix, "h", in_dim, cfg.hidden, rng);
        }
    }
    p.add("head.weight", normal_init({cfg.hidden, cfg.horizon}, rng));
    p.add("head.bias", Tensor::zeros({cfg.horizon}));
    return p;
}

RecurrentModel::RecurrentModel(RecurrentConfig cfg, uint64_t seed)
    : RecurrentModel(cfg, init_recurrent_parameters(cfg, seed)) {}

RecurrentModel::RecurrentModel(RecurrentConfig cfg, ModelParameters params)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    bind_views();
}

void RecurrentModel::bind_views() {
    const std::string stem = to_string(cfg_.cell) + ".";
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string prefix = stem + std::to_string(l) + ".";
        if (cfg_.cell == ModelKind::lstm) {
            LstmLayerWeights w;
            w.w_i = params_.get(prefix + "w_i");
            w.u_i = params_.get(prefix + "u_i");
            w.b_i = params_.get(prefix + "b_i");
            w.w_f = params_.get(prefix + "w_f");
            w.u_f = params_.get(prefix + "u_f");
            w.b_f = params_.get(prefix + "b_f");
            w.w_g = params_.get(prefix + "w_g");
            w.u_g = params_.get(prefix + "u_g");
            w.b_g = params_.get(prefix + "b_g");
            w.w_o = params_.get(prefix + "w_o");
            w.u_o = params_.get(prefix + "u_o");
            w.b_o = params_.get(prefix + "b_o");
            lstm_layers_.push_back(std::move(w));
        } else {
            GruLayerWeights w;
            w.w_z = params_.get(prefix + "w_z");
            w.u_z = params_.get(prefix + "u_z");
            w.b_z = params_.get(prefix + "b_z");
            w.w_r = params_.get(prefix + "w_r");
            w.u_r = params_.get(prefix + "u_r");
            w.b_r = params_.get(prefix + "b_r");
            w.w_h = params_.get(prefix + "w_h");
            w.u_h = params_.get(prefix + "u_h");
            w.b_h = params_.get(prefix + "b_h");
            gru_layers_.push_back(std::move(w));
        }
    }
    head_weight_ = params_.get("head.weight");
    head_bias_ = params_.get("head.bias");
}

Tensor RecurrentModel::forward(Tape& tape, const Tensor& window, bool training, Rng& rng) {
    (void)training;
    (void)rng;
    if (window.rank() != 2 || window.rows() != cfg_.seq_len ||
        window.cols() != cfg_.input_features) {
        throw ContractError("recurrent forward: window must be " + std::to_string(cfg_.seq_len) +
                            "x" + std::to_string(cfg_.input_features) + ", got " +
                            shape_to_string(window.shape()));
    }
    std::vector<Tensor> h(static_cast<size_t>(cfg_.layers));
    std::vector<Tensor> c(static_cast<size_t>(cfg_.layers));
    for (int l = 0; l < cfg_.layers; ++l) {
        h[static_cast<size_t>(l)] = Tensor::zeros({1, cfg_.hidden});
        c[static_cast<size_t>(l)] = Tensor::zeros({1, cfg_.hidden});
    }
    for (int t = 0; t < cfg_.seq_len; ++t) {
        std::vector<double> row(static_cast<size_t>(cfg_.input_features));
        for (int j = 0; j < cfg_.input_features; ++j) row[static_cast<size_t>(j)] = window.at(t, j);
        Tensor layer_in = Tensor::from_vector({1, cfg_.input_features}, std::move(row));
        for (int l = 0; l < cfg_.layers; ++l) {
            auto li = static_cast<size_t>(l);
            if (cfg_.cell == ModelKind::lstm) {
                auto [nh, nc] = lstm_cell_step(tape, layer_in, h[li], c[li], lstm_layers_[li]);
                h[li] = nh;
                c[li] = nc;
            } else {
                h[li] = gru_cell_step(tape, layer_in, h[li], gru_layers_[li]);
            }
            layer_in = h[li];
        }
    }
    Tensor out = add_rowwise(tape, matmul(tape, h.back(), head_weight_), head_bias_);
    return transpose(tape, out);  // [1 x m] -> [m x 1]
}

}  // namespace ewpf
