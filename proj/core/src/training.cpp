#include "ewpf/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace ewpf {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("Adam betas must be in [0, 1)");
    }
    if (eps_adam <= 0.0) throw ConfigError("eps_adam must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

void AdamState::init(const ModelParameters& params) {
    m.clear();
    v.clear();
    t = 0;
    for (const auto& p : params.items()) {
        m.emplace_back(static_cast<size_t>(p.tensor.size()), 0.0);
        v.emplace_back(static_cast<size_t>(p.tensor.size()), 0.0);
    }
}

void TrainingHistory::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "epoch,train_mse,test_mse,seconds\n";
    char buf[160];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.3f\n", e.epoch, e.train_mse, e.test_mse,
                      e.seconds);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path);
}

Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ContractError("mse_loss: shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                            shape_to_string(target.shape()));
    }
    Tensor diff = sub(tape, pred, target);
    return scale(tape, sum(tape, mul(tape, diff, diff)), 0.5 / pred.size());
}

void adam_step(ModelParameters& params, AdamState& state, const TrainConfig& cfg) {
    auto& items = params.items();
    if (state.m.size() != items.size()) {
        throw ContractError("adam_step: state not initialized for this parameter collection");
    }
    state.t += 1;
    const double b1 = cfg.effective_beta1();
    const double b2 = cfg.effective_beta2();
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (size_t pi = 0; pi < items.size(); ++pi) {
        Tensor& tensor = items[pi].tensor;
        auto grad = tensor.grad_mut();  // zero-filled when backward never reached it
        auto data = tensor.data_mut();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (size_t i = 0; i < data.size(); ++i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps_adam);
        }
    }
}

namespace {

// Prediction/target pair for one sample, reduced to the final step when the
// model restricts its loss.
std::pair<Tensor, Tensor> sample_pred_target(Tape& tape, Forecaster& model,
                                             const WindowedDataset& data, size_t k, bool training,
                                             Rng& rng) {
    Tensor pred = model.forward(tape, data.input(k), training, rng);
    Tensor target = data.target(k);
    if (model.restrict_loss_to_final_step() && model.horizon() > 1) {
        const int last = model.horizon() - 1;
        pred = slice_cols(tape, transpose(tape, pred), last, 1);
        target = Tensor::from_vector({1, 1}, {data.target_value(k, last)});
    }
    return {pred, target};
}

}  // namespace

double train_epoch(Forecaster& model, const WindowedDataset& train, AdamState& state,
                   const TrainConfig& cfg, Rng& rng) {
    if (train.size() == 0) throw ContractError("train_epoch: empty dataset");
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    shuffle(order, rng);

    double sq_sum = 0.0;
    size_t n_elems = 0;
    const size_t batch = static_cast<size_t>(cfg.batch_size);
    for (size_t start = 0; start < order.size(); start += batch) {
        const size_t end = std::min(start + batch, order.size());
        Tape tape;
        std::vector<Tensor> preds, targets;
        preds.reserve(end - start);
        targets.reserve(end - start);
        for (size_t s = start; s < end; ++s) {
            auto [pred, target] = sample_pred_target(tape, model, train, order[s], true, rng);
            preds.push_back(std::move(pred));
            targets.push_back(std::move(target));
        }
        Tensor pred = stack(tape, preds);
        Tensor target = stack(tape, targets);
        Tensor loss = mse_loss(tape, pred, target);
        const double loss_value = loss.value();
        if (!std::isfinite(loss_value)) {
            throw DivergenceError("training diverged: non-finite loss in batch starting at sample " +
                                  std::to_string(start));
        }
        model.parameters().zero_grad();
        tape.backward(loss);
        adam_step(model.parameters(), state, cfg);
        // loss carries the 1/2 factor; reported MSE is the conventional mean
        sq_sum += 2.0 * loss_value * pred.size();
        n_elems += static_cast<size_t>(pred.size());
    }
    return sq_sum / static_cast<double>(n_elems);
}

double dataset_mse(Forecaster& model, const WindowedDataset& data) {
    if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    Rng rng(0);  // unused: dropout is off outside training
    double sq_sum = 0.0;
    size_t n = 0;
    for (size_t k = 0; k < data.size(); ++k) {
        Tape tape(false);
        auto [pred, target] = sample_pred_target(tape, model, data, k, false, rng);
        for (int i = 0; i < pred.size(); ++i) {
            const double d = pred.at(i) - target.at(i);
            sq_sum += d * d;
        }
        n += static_cast<size_t>(pred.size());
    }
    return sq_sum / static_cast<double>(n);
}

TrainingHistory fit(Forecaster& model, const WindowedDataset& train, const WindowedDataset& test,
                    const TrainConfig& cfg, const FitSinks& sinks) {
    cfg.validate();
    if (!sinks.checkpoint_path.empty() && sinks.model_config == nullptr) {
        throw ContractError("fit: a checkpoint sink needs the model config");
    }
    Rng rng(cfg.seed);
    AdamState state;
    state.init(model.parameters());
    TrainingHistory history;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double train_mse = train_epoch(model, train, state, cfg, rng);
        const double test_mse = dataset_mse(model, test);
        const auto t1 = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(t1 - t0).count();
        history.epochs.push_back({epoch, train_mse, test_mse, seconds});
        if (cfg.stop_train_mse > 0.0 && train_mse < cfg.stop_train_mse) break;
    }
    if (!sinks.checkpoint_path.empty()) {
        Checkpoint ckpt;
        ckpt.config = *sinks.model_config;
        ckpt.params = model.parameters();
        if (sinks.scaler != nullptr) {
            ckpt.has_scaler = true;
            ckpt.scaler = *sinks.scaler;
        }
        save_checkpoint(sinks.checkpoint_path, ckpt);
    }
    if (!sinks.history_csv_path.empty()) history.save_csv(sinks.history_csv_path);
    return history;
}

FitModelResult fit_model(const ModelConfig& model_cfg, const WindowedDataset& train,
                         const WindowedDataset& test, const TrainConfig& cfg,
                         const FitSinks& sinks) {
    FitSinks with_cfg = sinks;
    with_cfg.model_config = &model_cfg;
    FitModelResult result;
    result.model = make_forecaster(model_cfg, cfg.seed);
    result.history = fit(*result.model, train, test, cfg, with_cfg);
    return result;
}

TrainConfig apply_train_keys(TrainConfig base, const KeyValue& kv) {
    base.lr = kv.get_double_or("lr", base.lr);
    base.beta1 = kv.get_double_or("beta1", base.beta1);
    base.beta2 = kv.get_double_or("beta2", base.beta2);
    base.eps_adam = kv.get_double_or("eps_adam", base.eps_adam);
    base.batch_size = static_cast<int>(kv.get_int_or("batch_size", base.batch_size));
    base.epochs = static_cast<int>(kv.get_int_or("epochs", base.epochs));
    base.seed = static_cast<uint64_t>(kv.get_int_or("seed", static_cast<int64_t>(base.seed)));
    base.paper_betas = kv.get_bool_or("paper_betas", base.paper_betas);
    base.stop_train_mse = kv.get_double_or("stop_train_mse", base.stop_train_mse);
    return base;
}

}  // namespace ewpf
