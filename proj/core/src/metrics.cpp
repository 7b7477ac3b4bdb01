#include "ewpf/metrics.hpp"

#include <cmath>
#include <limits>

namespace ewpf {

MetricsReport compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw ContractError("compute_metrics: size mismatch " + std::to_string(actual.size()) +
                            " vs " + std::to_string(predicted.size()));
    }
    if (actual.empty()) throw ContractError("compute_metrics: empty input");
    const size_t n = actual.size();

    MetricsReport r;
    r.n_test_samples = static_cast<int>(n);
    double sq_sum = 0.0, abs_sum = 0.0, pct_sum = 0.0, y_sum = 0.0;
    int pct_count = 0;
    for (size_t i = 0; i < n; ++i) {
        const double d = actual[i] - predicted[i];
        sq_sum += d * d;
        abs_sum += std::abs(d);
        y_sum += actual[i];
        if (std::abs(actual[i]) > kMapeEpsilon) {
            pct_sum += std::abs(d) / std::abs(actual[i]);
            ++pct_count;
        }
    }
    r.mse = sq_sum / static_cast<double>(n);
    r.mae = abs_sum / static_cast<double>(n);
    r.mape_excluded = static_cast<int>(n) - pct_count;
    r.mape = pct_count > 0 ? pct_sum / pct_count : 0.0;

    const double y_mean = y_sum / static_cast<double>(n);
    double ss_tot = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double c = actual[i] - y_mean;
        ss_tot += c * c;
    }
    if (ss_tot == 0.0) {
        r.r2_defined = false;
        r.r2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.r2 = 1.0 - sq_sum / ss_tot;
    }
    return r;
}

namespace {

// actual/predicted at one horizon step across all test samples
void collect_step(Forecaster& model, const WindowedDataset& test, int step,
                  const EvalOptions& opts, std::vector<double>& actual,
                  std::vector<double>& predicted) {
    Rng rng(0);  // dropout is disabled outside training
    actual.resize(test.size());
    predicted.resize(test.size());
    for (size_t k = 0; k < test.size(); ++k) {
        Tape tape(false);
        Tensor pred = model.forward(tape, test.input(k), false, rng);
        double y = test.target_value(k, step);
        double yhat = pred.at(step, 0);
        if (opts.denormalize) {
            y = opts.scaler->inverse(y);
            yhat = opts.scaler->inverse(yhat);
        }
        actual[k] = y;
        predicted[k] = yhat;
    }
}

void check_eval_pre(Forecaster& model, const WindowedDataset& test, const EvalOptions& opts) {
    if (test.size() == 0) throw ContractError("evaluate: empty test set");
    if (test.seq_len() != model.seq_len() || test.horizon() != model.horizon()) {
        throw ContractError("evaluate: dataset windows " + std::to_string(test.seq_len()) + "/" +
                            std::to_string(test.horizon()) + " do not match model " +
                            std::to_string(model.seq_len()) + "/" +
                            std::to_string(model.horizon()));
    }
    if (opts.denormalize && opts.scaler == nullptr) {
        throw ContractError("evaluate: denormalize requested without a scaler");
    }
}

}  // namespace

MetricsReport evaluate(Forecaster& model, const WindowedDataset& test, const EvalOptions& opts) {
    check_eval_pre(model, test, opts);
    std::vector<double> actual, predicted;
    collect_step(model, test, model.horizon() - 1, opts, actual, predicted);
    MetricsReport r = compute_metrics(actual, predicted);
    r.model = model.kind();
    r.seq_len = model.seq_len();
    r.horizon = model.horizon();
    return r;
}

std::vector<MetricsReport> evaluate_per_step(Forecaster& model, const WindowedDataset& test,
                                             const EvalOptions& opts) {
    check_eval_pre(model, test, opts);
    std::vector<MetricsReport> reports;
    for (int step = 0; step < model.horizon(); ++step) {
        std::vector<double> actual, predicted;
        collect_step(model, test, step, opts, actual, predicted);
        MetricsReport r = compute_metrics(actual, predicted);
        r.model = model.kind();
        r.seq_len = model.seq_len();
        r.horizon = step + 1;
        reports.push_back(r);
    }
    return reports;
}

std::vector<ForecastRow> collect_forecasts(Forecaster& model, const WindowedDataset& test,
                                           int64_t index_offset, const EvalOptions& opts) {
    check_eval_pre(model, test, opts);
    const int step = model.horizon() - 1;
    std::vector<double> actual, predicted;
    collect_step(model, test, step, opts, actual, predicted);
    std::vector<ForecastRow> rows(test.size());
    for (size_t k = 0; k < test.size(); ++k) {
        rows[k].t = index_offset + test.origin(k) + test.seq_len() + step;
        rows[k].actual = actual[k];
        rows[k].predicted = predicted[k];
    }
    return rows;
}

}  // namespace ewpf
