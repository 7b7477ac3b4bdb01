#pragma once

#include <span>
#include <vector>

#include "ewpf/data.hpp"
#include "ewpf/forecaster.hpp"

namespace ewpf {

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    // mean(|y - yhat| / |y|) over samples with |y| > mape_epsilon; the
    // excluded count is reported alongside.
    double mape = 0.0;
    double r2 = 0.0;
    bool r2_defined = true;  // false when SS_tot == 0 (constant targets)

    ModelKind model = ModelKind::transformer;
    int seq_len = 0;
    int horizon = 0;
    int n_test_samples = 0;
    int mape_excluded = 0;
};

inline constexpr double kMapeEpsilon = 1e-6;

// Straight metric kernels over aligned actual/predicted vectors.
MetricsReport compute_metrics(std::span<const double> actual, std::span<const double> predicted);

struct EvalOptions {
    // Report in physical units by inverting the scaler; default is the
    // normalized space the loss is computed in.
    bool denormalize = false;
    const Scaler* scaler = nullptr;
};

// Metrics at the reporting horizon (the final step) over every test sample,
// dropout disabled.
MetricsReport evaluate(Forecaster& model, const WindowedDataset& test,
                       const EvalOptions& opts = {});

// Per-step breakdown, one report per horizon step 0..horizon-1.
std::vector<MetricsReport> evaluate_per_step(Forecaster& model, const WindowedDataset& test,
                                             const EvalOptions& opts = {});

// One (t, actual, predicted) row per test sample at the reporting step;
// t is the target's absolute index, offset by `index_offset` (the position of
// the test series within the full series).
struct ForecastRow {
    int64_t t = 0;
    double actual = 0.0;
    double predicted = 0.0;
};

std::vector<ForecastRow> collect_forecasts(Forecaster& model, const WindowedDataset& test,
                                           int64_t index_offset, const EvalOptions& opts = {});

}  // namespace ewpf
