#include "ewpf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

namespace ewpf {

namespace {

int model_rank(ModelKind kind) {
    switch (kind) {
        case ModelKind::lstm: return 0;
        case ModelKind::gru: return 1;
        case ModelKind::transformer: return 2;
    }
    return 3;
}

uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Cell seed depends on the grid seed and the cell identity, never on cell
// order or thread scheduling.
uint64_t cell_seed(uint64_t base, const BenchCell& cell) {
    uint64_t h = mix64(base);
    h = mix64(h ^ static_cast<uint64_t>(model_rank(cell.model) + 1));
    h = mix64(h ^ (static_cast<uint64_t>(cell.seq_len) << 8));
    h = mix64(h ^ (static_cast<uint64_t>(cell.horizon) << 24));
    return h;
}

std::string format_metric(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const std::set<std::string>& known_spec_keys() {
    static const std::set<std::string> keys = {
        // grid
        "data", "profile", "n", "seed", "train_frac", "models", "seqs", "horizons", "out", "jobs",
        // transformer
        "d_model", "n_heads", "n_layers", "d_ff", "dropout", "tie_embeddings", "eps_layernorm",
        "loss_final_step_only", "input_features", "output_features",
        // recurrent
        "hidden", "layers",
        // training
        "lr", "beta1", "beta2", "eps_adam", "batch_size", "epochs", "paper_betas",
        "stop_train_mse"};
    return keys;
}

}  // namespace

std::string BenchCell::name() const {
    return "h" + std::to_string(horizon) + "_seq" + std::to_string(seq_len) + "_" +
           to_string(model);
}

void BenchmarkSpec::validate() const {
    if (cells.empty()) throw ConfigError("benchmark spec has no cells");
    for (size_t i = 0; i < cells.size(); ++i) {
        for (size_t j = i + 1; j < cells.size(); ++j) {
            if (cells[i] == cells[j]) {
                throw ConfigError("duplicate benchmark cell: " + cells[i].name());
            }
        }
        if (cells[i].seq_len < 1 || cells[i].horizon < 1) {
            throw ConfigError("benchmark cell " + cells[i].name() + " has invalid dimensions");
        }
    }
    if (data_path.empty() && n < 1) throw ConfigError("synthetic series length must be >= 1");
    if (train_frac <= 0.0 || train_frac >= 1.0) throw ConfigError("train_frac must be in (0,1)");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (out_dir.empty()) throw ConfigError("output directory must be set");
    train.validate();
}

BenchmarkSpec benchmark_spec_from_keyvalue(const KeyValue& kv) {
    for (const auto& [key, value] : kv.entries()) {
        if (!known_spec_keys().count(key)) {
            if (key == "seq_len" || key == "horizon") {
                throw DataError("benchmark spec: use 'seqs'/'horizons' lists instead of '" + key +
                                "'");
            }
            throw DataError("benchmark spec: unknown key '" + key + "'");
        }
    }
    BenchmarkSpec spec;
    spec.data_path = kv.get_or("data", "");
    spec.profile = kv.get_or("profile", spec.profile);
    spec.n = static_cast<int>(kv.get_int_or("n", spec.n));
    spec.seed = static_cast<uint64_t>(kv.get_int_or("seed", static_cast<int64_t>(spec.seed)));
    spec.train_frac = kv.get_double_or("train_frac", spec.train_frac);
    spec.out_dir = kv.get_or("out", spec.out_dir);
    spec.jobs = static_cast<int>(kv.get_int_or("jobs", spec.jobs));

    std::vector<ModelKind> models;
    for (const auto& name : kv.get_list_or("models", {"lstm", "gru", "transformer"})) {
        models.push_back(model_kind_from_string(name));
    }
    std::vector<int> seqs, horizons;
    for (const auto& s : kv.get_list_or("seqs", {"10", "20", "50"})) seqs.push_back(std::stoi(s));
    for (const auto& s : kv.get_list_or("horizons", {"1", "5"})) horizons.push_back(std::stoi(s));
    for (int h : horizons)
        for (int l : seqs)
            for (ModelKind m : models) spec.cells.push_back({m, l, h});

    spec.transformer = apply_transformer_keys(spec.transformer, kv);
    spec.recurrent = apply_recurrent_keys(spec.recurrent, kv);
    spec.train = apply_train_keys(spec.train, kv);
    return spec;
}

BenchmarkSpec load_benchmark_spec(const std::string& path) {
    return benchmark_spec_from_keyvalue(KeyValue::load(path));
}

namespace {

CellResult run_cell(const BenchmarkSpec& spec, const BenchCell& cell,
                    const std::vector<double>& train_norm, const std::vector<double>& test_norm,
                    const Scaler& scaler) {
    CellResult result;
    result.cell = cell;
    try {
        ModelConfig mc;
        mc.kind = cell.model;
        if (cell.model == ModelKind::transformer) {
            mc.transformer = spec.transformer;
            mc.transformer.seq_len = cell.seq_len;
            mc.transformer.horizon = cell.horizon;
        } else {
            mc.recurrent = spec.recurrent;
            mc.recurrent.cell = cell.model;
            mc.recurrent.seq_len = cell.seq_len;
            mc.recurrent.horizon = cell.horizon;
        }
        TrainConfig tc = spec.train;
        tc.seed = cell_seed(spec.seed, cell);

        WindowedDataset train_w = make_windows(train_norm, cell.seq_len, cell.horizon);
        WindowedDataset test_w = make_windows(test_norm, cell.seq_len, cell.horizon);

        const auto dir = std::filesystem::path(spec.out_dir);
        FitSinks sinks;
        sinks.checkpoint_path = (dir / ("ckpt_" + cell.name() + ".ckpt")).string();
        sinks.scaler = &scaler;
        FitModelResult fitted = fit_model(mc, train_w, test_w, tc, sinks);

        result.metrics = evaluate(*fitted.model, test_w);
        result.history = std::move(fitted.history);

        EvalOptions denorm;
        denorm.denormalize = true;
        denorm.scaler = &scaler;
        auto rows = collect_forecasts(*fitted.model, test_w,
                                      static_cast<int64_t>(train_norm.size()), denorm);
        emit_forecast_csv(rows, (dir / ("forecast_" + cell.name() + ".csv")).string());
        emit_loss_csv(result.history, (dir / ("loss_" + cell.name() + ".csv")).string());
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

}  // namespace

std::vector<CellResult> run_benchmark_grid(const BenchmarkSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);

    TimeSeries series = spec.data_path.empty()
                            ? synthesize_series(spec.n, spec.seed, spec.profile)
                            : load_csv(spec.data_path);
    size_t max_need = 0;
    for (const auto& cell : spec.cells) {
        max_need = std::max(max_need, static_cast<size_t>(cell.seq_len + cell.horizon));
    }
    auto [train_ts, test_ts] = split_train_test(series, spec.train_frac, max_need);
    const Scaler scaler = fit_minmax(train_ts.values);
    const std::vector<double> train_norm = normalize(scaler, train_ts.values);
    const std::vector<double> test_norm = normalize(scaler, test_ts.values);

    std::vector<CellResult> results(spec.cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= spec.cells.size()) break;
            results[i] = run_cell(spec, spec.cells[i], train_norm, test_norm, scaler);
        }
    };
    const int n_threads = std::min<int>(spec.jobs, static_cast<int>(spec.cells.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

void emit_loss_csv(const TrainingHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "epoch,train_mse,test_mse\n";
    char buf[128];
    for (const auto& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", e.epoch, e.train_mse, e.test_mse);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path);
}

void emit_forecast_csv(const std::vector<ForecastRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "t,actual,predicted\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.15g,%.15g\n", static_cast<long long>(r.t),
                      r.actual, r.predicted);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path);
}

void emit_report(const std::vector<CellResult>& results, const std::string& dir) {
    if (results.empty()) throw ContractError("emit_report: no results");
    std::filesystem::create_directories(dir);

    std::vector<const CellResult*> ordered;
    ordered.reserve(results.size());
    for (const auto& r : results) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](const CellResult* a, const CellResult* b) {
        if (a->cell.horizon != b->cell.horizon) return a->cell.horizon < b->cell.horizon;
        if (a->cell.seq_len != b->cell.seq_len) return a->cell.seq_len < b->cell.seq_len;
        return model_rank(a->cell.model) < model_rank(b->cell.model);
    });

    const auto csv_path = std::filesystem::path(dir) / "table2.csv";
    {
        std::ofstream out(csv_path);
        if (!out) throw DataError("cannot write file: " + csv_path.string());
        out << "Step,Sequence,Model,MSE,MAE,MAPE,R2\n";
        for (const CellResult* r : ordered) {
            out << r->cell.horizon << ',' << r->cell.seq_len << ',' << to_string(r->cell.model)
                << ',';
            if (r->ok) {
                out << format_metric(r->metrics.mse) << ',' << format_metric(r->metrics.mae) << ','
                    << format_metric(r->metrics.mape) << ','
                    << (r->metrics.r2_defined ? format_metric(r->metrics.r2) : "nan") << '\n';
            } else {
                out << "nan,nan,nan,nan\n";
            }
        }
        if (!out) throw DataError("write failed: " + csv_path.string());
    }

    const auto md_path = std::filesystem::path(dir) / "table2.md";
    std::ofstream out(md_path);
    if (!out) throw DataError("cannot write file: " + md_path.string());
    out << "# Forecast benchmark\n\n";
    out << "Metrics are computed in normalized [-1, 1] space at the reporting horizon step.\n";
    out << "MAPE skips samples with |actual| <= " << format_metric(kMapeEpsilon)
        << "; the skipped count is listed per row.\n\n";
    out << "| Step | Sequence | Model | MSE | MAE | MAPE | R2 | MAPE excluded |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const CellResult* r : ordered) {
        // min-MSE model within the (step, sequence) group gets bolded
        bool best = false;
        if (r->ok) {
            best = true;
            for (const auto& other : results) {
                if (other.ok && other.cell.horizon == r->cell.horizon &&
                    other.cell.seq_len == r->cell.seq_len &&
                    other.metrics.mse < r->metrics.mse) {
                    best = false;
                    break;
                }
            }
        }
        const std::string label = r->cell.horizon == 1 ? "single" : "multi";
        std::string model_name = to_string(r->cell.model);
        if (best) model_name = "**" + model_name + "**";
        out << "| " << label << " | " << r->cell.seq_len << " | " << model_name << " | ";
        if (r->ok) {
            out << format_metric(r->metrics.mse) << " | " << format_metric(r->metrics.mae)
                << " | " << format_metric(r->metrics.mape) << " | "
                << (r->metrics.r2_defined ? format_metric(r->metrics.r2) : "n/a") << " | "
                << r->metrics.mape_excluded << " |\n";
        } else {
            out << "failed | failed | failed | failed | - |\n";
        }
    }

    bool any_failed = false;
    for (const auto& r : results) any_failed = any_failed || !r.ok;
    if (any_failed) {
        out << "\n## Failures\n\n";
        for (const CellResult* r : ordered) {
            if (!r->ok) out << "- " << r->cell.name() << ": " << r->error << "\n";
        }
    }

    out << "\n## Published EWPF reference results\n\n";
    out << "Reference values from the EWPF study on the German hourly wind-power dataset\n";
    out << "(61,500 samples, not redistributable); they are not reproducible from the\n";
    out << "synthetic data and are listed for qualitative comparison only. The middle\n";
    out << "metric column is labeled MAE in the final revision and MAPE in an earlier one,\n";
    out << "so this project computes both. Values in parentheses are conflicting readings\n";
    out << "from the earlier revision.\n\n";
    out << "| Step | Sequence | Model | MSE | MAE | R2 |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& row : reference_results()) {
        out << "| " << (row.horizon == 1 ? "single" : "multi") << " | " << row.seq_len << " | "
            << to_string(row.model) << " | " << format_metric(row.mse);
        if (row.alt_mse) out << " (" << format_metric(*row.alt_mse) << ")";
        out << " | " << format_metric(row.mae);
        if (row.alt_mae) out << " (" << format_metric(*row.alt_mae) << ")";
        out << " | " << format_metric(row.r2) << " |\n";
    }
    if (!out) throw DataError("write failed: " + md_path.string());
}

const std::vector<ReferenceRow>& reference_results() {
    static const std::vector<ReferenceRow> rows = {
        {1, 10, ModelKind::lstm, 0.0029, 0.396, 0.9729, {}, {}},
        {1, 10, ModelKind::gru, 0.0038, 0.552, 0.9723, {}, {}},
        {1, 10, ModelKind::transformer, 0.0010, 0.095, 0.9923, {}, {}},
        {1, 20, ModelKind::lstm, 0.0054, 0.442, 0.9672, {}, {}},
        {1, 20, ModelKind::gru, 0.0038, 0.610, 0.9695, {}, {}},
        {1, 20, ModelKind::transformer, 0.0008, 0.0790, 0.9940, {}, {}},
        {1, 50, ModelKind::lstm, 0.0023, 0.3932, 0.9701, {}, {}},
        {1, 50, ModelKind::gru, 0.0040, 0.443, 0.9706, {}, {}},
        {1, 50, ModelKind::transformer, 0.0007, 0.0820, 0.9958, {}, {}},
        {5, 10, ModelKind::lstm, 0.0345, 0.856, 0.7454, {}, {}},
        {5, 10, ModelKind::gru, 0.0598, 1.340, 0.5622, {}, {}},
        {5, 10, ModelKind::transformer, 0.0212, 0.480, 0.8331, {}, {}},
        {5, 20, ModelKind::lstm, 0.345, 0.962, 0.7496, 0.0345, {}},
        {5, 20, ModelKind::gru, 0.2876, 0.911, 0.7812, {}, {}},
        {5, 20, ModelKind::transformer, 0.1901, 0.456, 0.8471, {}, 0.546},
        {5, 50, ModelKind::lstm, 0.294, 0.845, 0.7833, 0.0294, {}},
        {5, 50, ModelKind::gru, 0.0263, 0.876, 0.8067, {}, {}},
        {5, 50, ModelKind::transformer, 0.0103, 0.650, 0.8431, {}, {}},
    };
    return rows;
}

}  // namespace ewpf
