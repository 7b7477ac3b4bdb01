#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ewpf/keyvalue.hpp"
#include "ewpf/metrics.hpp"
#include "ewpf/training.hpp"

namespace ewpf {

struct BenchCell {
    ModelKind model = ModelKind::transformer;
    int seq_len = 10;
    int horizon = 1;

    std::string name() const;  // e.g. "h1_seq20_transformer"
    bool operator==(const BenchCell&) const = default;
};

struct BenchmarkSpec {
    // Data source: a CSV path, or a synthetic profile when the path is empty.
    std::string data_path;
    std::string profile = "diurnal-noise";
    int n = 5000;
    uint64_t seed = 42;
    double train_frac = 0.70;

    std::vector<BenchCell> cells;  // unique; default full 2x3x3 grid

    TransformerConfig transformer;
    RecurrentConfig recurrent;
    TrainConfig train;

    std::string out_dir = "bench_out";
    int jobs = 1;

    void validate() const;
};

// Flat key-value spec file; unknown keys are rejected.
BenchmarkSpec load_benchmark_spec(const std::string& path);
BenchmarkSpec benchmark_spec_from_keyvalue(const KeyValue& kv);

struct CellResult {
    BenchCell cell;
    bool ok = false;
    std::string error;  // failure reason when !ok
    MetricsReport metrics;
    TrainingHistory history;
};

// Trains and evaluates every cell against the shared split/scaler, writing
// per-cell checkpoints and plot data under spec.out_dir. Cell failures are
// recorded and the grid continues. Cells may run on spec.jobs threads; every
// cell is independently seeded so results do not depend on scheduling.
std::vector<CellResult> run_benchmark_grid(const BenchmarkSpec& spec);

// table2.csv (Step,Sequence,Model,MSE,MAE,MAPE,R2) and table2.md with the
// best MSE per (step, sequence) group bolded. One row per cell, stable
// (step, sequence, model) order, byte-identical across reruns.
void emit_report(const std::vector<CellResult>& results, const std::string& dir);

void emit_loss_csv(const TrainingHistory& history, const std::string& path);
void emit_forecast_csv(const std::vector<ForecastRow>& rows, const std::string& path);

// Reference results of the original EWPF experiments on the German hourly
// wind-power dataset (61,500 samples; not redistributable), kept for
// comparison in report footers. alt_* carry readings that differ between
// published revisions.
struct ReferenceRow {
    int horizon;  // 1 or 5
    int seq_len;
    ModelKind model;
    double mse;
    double mae;  // labeled MAPE in an earlier revision; both metrics are computed here
    double r2;
    std::optional<double> alt_mse;
    std::optional<double> alt_mae;
};

const std::vector<ReferenceRow>& reference_results();

}  // namespace ewpf
