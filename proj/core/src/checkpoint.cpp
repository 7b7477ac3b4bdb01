#include "ewpf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts need byte swapping");

namespace ewpf {

int ModelConfig::seq_len() const {
    return kind == ModelKind::transformer ? transformer.seq_len : recurrent.seq_len;
}

int ModelConfig::horizon() const {
    return kind == ModelKind::transformer ? transformer.horizon : recurrent.horizon;
}

void ModelConfig::validate() const {
    if (kind == ModelKind::transformer) {
        transformer.validate();
    } else {
        RecurrentConfig r = recurrent;
        r.cell = kind;
        r.validate();
    }
}

std::unique_ptr<Forecaster> make_forecaster(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    if (cfg.kind == ModelKind::transformer) {
        return std::make_unique<TransformerModel>(cfg.transformer, seed);
    }
    RecurrentConfig r = cfg.recurrent;
    r.cell = cfg.kind;
    return std::make_unique<RecurrentModel>(r, seed);
}

std::unique_ptr<Forecaster> make_forecaster(const ModelConfig& cfg, ModelParameters params) {
    cfg.validate();
    if (cfg.kind == ModelKind::transformer) {
        return std::make_unique<TransformerModel>(cfg.transformer, std::move(params));
    }
    RecurrentConfig r = cfg.recurrent;
    r.cell = cfg.kind;
    return std::make_unique<RecurrentModel>(r, std::move(params));
}

TransformerConfig apply_transformer_keys(TransformerConfig base, const KeyValue& kv) {
    base.d_model = static_cast<int>(kv.get_int_or("d_model", base.d_model));
    base.n_heads = static_cast<int>(kv.get_int_or("n_heads", base.n_heads));
    base.n_layers = static_cast<int>(kv.get_int_or("n_layers", base.n_layers));
    base.d_ff = static_cast<int>(kv.get_int_or("d_ff", base.d_ff));
    base.dropout_p = kv.get_double_or("dropout", base.dropout_p);
    base.input_features = static_cast<int>(kv.get_int_or("input_features", base.input_features));
    base.output_features =
        static_cast<int>(kv.get_int_or("output_features", base.output_features));
    base.horizon = static_cast<int>(kv.get_int_or("horizon", base.horizon));
    base.seq_len = static_cast<int>(kv.get_int_or("seq_len", base.seq_len));
    base.tie_embeddings = kv.get_bool_or("tie_embeddings", base.tie_embeddings);
    base.eps_layernorm = kv.get_double_or("eps_layernorm", base.eps_layernorm);
    base.loss_final_step_only = kv.get_bool_or("loss_final_step_only", base.loss_final_step_only);
    return base;
}

RecurrentConfig apply_recurrent_keys(RecurrentConfig base, const KeyValue& kv) {
    base.hidden = static_cast<int>(kv.get_int_or("hidden", base.hidden));
    base.layers = static_cast<int>(kv.get_int_or("layers", base.layers));
    base.horizon = static_cast<int>(kv.get_int_or("horizon", base.horizon));
    base.seq_len = static_cast<int>(kv.get_int_or("seq_len", base.seq_len));
    base.input_features = static_cast<int>(kv.get_int_or("input_features", base.input_features));
    return base;
}

KeyValue model_config_to_keyvalue(const ModelConfig& cfg) {
    KeyValue kv;
    kv.set("kind", to_string(cfg.kind));
    if (cfg.kind == ModelKind::transformer) {
        const auto& t = cfg.transformer;
        kv.set_int("seq_len", t.seq_len);
        kv.set_int("horizon", t.horizon);
        kv.set_int("d_model", t.d_model);
        kv.set_int("n_heads", t.n_heads);
        kv.set_int("n_layers", t.n_layers);
        kv.set_int("d_ff", t.d_ff);
        kv.set_double("dropout", t.dropout_p);
        kv.set_int("input_features", t.input_features);
        kv.set_int("output_features", t.output_features);
        kv.set_bool("tie_embeddings", t.tie_embeddings);
        kv.set_double("eps_layernorm", t.eps_layernorm);
        kv.set_bool("loss_final_step_only", t.loss_final_step_only);
    } else {
        const auto& r = cfg.recurrent;
        kv.set_int("seq_len", r.seq_len);
        kv.set_int("horizon", r.horizon);
        kv.set_int("hidden", r.hidden);
        kv.set_int("layers", r.layers);
        kv.set_int("input_features", r.input_features);
    }
    return kv;
}

ModelConfig model_config_from_keyvalue(const KeyValue& kv) {
    ModelConfig cfg;
    cfg.kind = model_kind_from_string(kv.get("kind"));
    if (cfg.kind == ModelKind::transformer) {
        cfg.transformer = apply_transformer_keys(TransformerConfig{}, kv);
    } else {
        cfg.recurrent = apply_recurrent_keys(RecurrentConfig{}, kv);
        cfg.recurrent.cell = cfg.kind;
    }
    return cfg;
}

namespace {

constexpr const char* kMagicKey = "ewpf-checkpoint";
constexpr const char* kHeaderEnd = "end_header\n";

std::string shape_text(const Shape& shape) {
    std::string s;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

Shape parse_shape_text(const std::string& text) {
    Shape shape;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            shape.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw DataError("checkpoint: bad shape '" + text + "'");
        }
    }
    if (shape.empty()) throw DataError("checkpoint: empty shape");
    return shape;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    KeyValue kv;
    kv.set_int(kMagicKey, 1);
    for (const auto& [k, v] : model_config_to_keyvalue(ckpt.config).entries()) kv.set(k, v);
    if (ckpt.has_scaler) {
        kv.set_double("scaler.min", ckpt.scaler.min);
        kv.set_double("scaler.max", ckpt.scaler.max);
    }
    kv.set_int("param.count", static_cast<int64_t>(ckpt.params.count()));
    int64_t offset = 0;
    const auto& items = ckpt.params.items();
    for (size_t i = 0; i < items.size(); ++i) {
        const std::string stem = "param." + std::to_string(i) + ".";
        kv.set(stem + "name", items[i].name);
        kv.set(stem + "shape", shape_text(items[i].tensor.shape()));
        kv.set_int(stem + "offset", offset);
        offset += static_cast<int64_t>(items[i].tensor.size()) * 8;
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << kv.to_string() << kHeaderEnd;
    for (const auto& item : items) {
        auto data = item.tensor.data();
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string raw = buf.str();

    const std::string sep = kHeaderEnd;
    size_t header_end = raw.find(sep);
    if (header_end == std::string::npos) {
        throw DataError(path + ": not an ewpf checkpoint (missing end_header)");
    }
    const std::string header = raw.substr(0, header_end);
    const size_t blob_start = header_end + sep.size();
    const size_t blob_size = raw.size() - blob_start;

    KeyValue kv = KeyValue::parse(header);
    if (!kv.has(kMagicKey) || kv.get_int(kMagicKey) != 1) {
        throw DataError(path + ": not an ewpf checkpoint (bad magic)");
    }

    Checkpoint ckpt;
    ckpt.config = model_config_from_keyvalue(kv);
    if (kv.has("scaler.min")) {
        ckpt.has_scaler = true;
        ckpt.scaler.min = kv.get_double("scaler.min");
        ckpt.scaler.max = kv.get_double("scaler.max");
    }
    const int64_t count = kv.get_int("param.count");
    for (int64_t i = 0; i < count; ++i) {
        const std::string stem = "param." + std::to_string(i) + ".";
        const std::string name = kv.get(stem + "name");
        const Shape shape = parse_shape_text(kv.get(stem + "shape"));
        const int64_t offset = kv.get_int(stem + "offset");
        const int64_t bytes = static_cast<int64_t>(shape_numel(shape)) * 8;
        if (offset < 0 || offset + bytes > static_cast<int64_t>(blob_size)) {
            throw DataError(path + ": parameter '" + name + "' data out of range");
        }
        std::vector<double> values(static_cast<size_t>(shape_numel(shape)));
        std::memcpy(values.data(), raw.data() + blob_start + offset,
                    static_cast<size_t>(bytes));
        ckpt.params.add(name, Tensor::from_vector(shape, std::move(values)));
    }
    return ckpt;
}

}  // namespace ewpf
