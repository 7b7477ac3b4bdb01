#pragma once

#include <string>

#include "ewpf/tensor.hpp"

namespace ewpf {

enum class ModelKind { transformer, lstm, gru };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);  // throws ConfigError

// Common surface of the three forecasting models: map one normalized input
// window [seq_len x 1] to a horizon forecast [horizon x 1] on the given tape.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual Tensor forward(Tape& tape, const Tensor& window, bool training, Rng& rng) = 0;

    virtual ModelParameters& parameters() = 0;
    virtual const ModelParameters& parameters() const = 0;
    virtual ModelKind kind() const = 0;
    virtual int seq_len() const = 0;
    virtual int horizon() const = 0;

    // When true the training loss covers only the final horizon step.
    virtual bool restrict_loss_to_final_step() const { return false; }
};

}  // namespace ewpf
