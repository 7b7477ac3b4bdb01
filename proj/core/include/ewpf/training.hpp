#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ewpf/checkpoint.hpp"
#include "ewpf/data.hpp"
#include "ewpf/forecaster.hpp"
#include "ewpf/keyvalue.hpp"

namespace ewpf {

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int batch_size = 64;
    int epochs = 50;
    uint64_t seed = 42;
    // Swaps (beta1, beta2) for (0, 0.5).
    bool paper_betas = false;
    // When > 0, training stops once the epoch train MSE drops below this
    // (used by smoke experiments; the benchmark protocol runs fixed epochs).
    double stop_train_mse = -1.0;

    double effective_beta1() const { return paper_betas ? 0.0 : beta1; }
    double effective_beta2() const { return paper_betas ? 0.5 : beta2; }
    void validate() const;  // throws ConfigError
};

// First/second moment buffers per parameter, aligned with the collection's
// insertion order; t counts completed steps.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    int64_t t = 0;

    void init(const ModelParameters& params);
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;  // conventional mean (no 1/2 factor), normalized space
    double test_mse = 0.0;
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;

    void save_csv(const std::string& path) const;  // epoch,train_mse,test_mse,seconds
};

// Mean over all elements of (1/2)(pred - target)^2, on the tape. The 1/2
// follows the training objective; reported MSE values are the conventional
// unscaled mean.
Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target);

// Adam with bias correction: theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ModelParameters& params, AdamState& state, const TrainConfig& cfg);

// One pass over shuffled batches (last batch may be short): forward, loss,
// zero grads, backward, Adam step updating all parameter groups together.
// Returns the epoch train MSE (conventional mean). Throws DivergenceError on
// a non-finite loss.
double train_epoch(Forecaster& model, const WindowedDataset& train, AdamState& state,
                   const TrainConfig& cfg, Rng& rng);

// Forward-only conventional MSE over all horizon steps.
double dataset_mse(Forecaster& model, const WindowedDataset& data);

struct FitSinks {
    std::string checkpoint_path;  // written after the final epoch when set
    const ModelConfig* model_config = nullptr;  // required when checkpoint_path is set
    std::string history_csv_path;  // written after the final epoch when set
    const Scaler* scaler = nullptr;  // recorded in the checkpoint when given
};

TrainingHistory fit(Forecaster& model, const WindowedDataset& train, const WindowedDataset& test,
                    const TrainConfig& cfg, const FitSinks& sinks = {});

struct FitModelResult {
    std::unique_ptr<Forecaster> model;
    TrainingHistory history;
};

// Builds the model from its config (seeded from cfg.seed) and trains it.
FitModelResult fit_model(const ModelConfig& model_cfg, const WindowedDataset& train,
                         const WindowedDataset& test, const TrainConfig& cfg,
                         const FitSinks& sinks = {});

// Applies config-file keys (lr, beta1, beta2, eps_adam, batch_size, epochs,
// seed, paper_betas, stop_train_mse) onto a base config.
TrainConfig apply_train_keys(TrainConfig base, const KeyValue& kv);

}  // namespace ewpf
