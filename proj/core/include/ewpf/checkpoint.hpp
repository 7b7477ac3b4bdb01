#pragma once

#include <memory>
#include <string>

#include "ewpf/baselines.hpp"
#include "ewpf/data.hpp"
#include "ewpf/keyvalue.hpp"
#include "ewpf/model.hpp"

namespace ewpf {

// Checkpointable description of a model: which kind plus its hyperparameters.
struct ModelConfig {
    ModelKind kind = ModelKind::transformer;
    TransformerConfig transformer;
    RecurrentConfig recurrent;

    int seq_len() const;
    int horizon() const;
    void validate() const;
};

std::unique_ptr<Forecaster> make_forecaster(const ModelConfig& cfg, uint64_t seed);
std::unique_ptr<Forecaster> make_forecaster(const ModelConfig& cfg, ModelParameters params);

struct Checkpoint {
    ModelConfig config;
    ModelParameters params;
    bool has_scaler = false;
    Scaler scaler;
};

// File layout: a text header ("ewpf-checkpoint = 1", config keys, scaler, and
// a parameter manifest of name/shape/byte-offset per entry) terminated by an
// `end_header` line, followed by the raw little-endian f64 parameter data.
// Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Flat config keys shared by checkpoints, --config files and benchmark specs.
KeyValue model_config_to_keyvalue(const ModelConfig& cfg);
ModelConfig model_config_from_keyvalue(const KeyValue& kv);  // requires kind/seq_len/horizon
TransformerConfig apply_transformer_keys(TransformerConfig base, const KeyValue& kv);
RecurrentConfig apply_recurrent_keys(RecurrentConfig base, const KeyValue& kv);

}  // namespace ewpf
