#include "ewpf/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ewpf/bench.hpp"
#include "ewpf/checkpoint.hpp"
#include "ewpf/data.hpp"
#include "ewpf/metrics.hpp"
#include "ewpf/training.hpp"

namespace ewpf {

namespace {

std::optional<uint64_t> env_seed() {
    const char* s = std::getenv("EWPF_SEED");
    if (s == nullptr || *s == '\0') return std::nullopt;
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ConfigError(std::string("EWPF_SEED is not an integer: ") + s);
    }
}

void print_metrics(const MetricsReport& r, const std::string& space) {
    std::printf("model=%s seq=%d horizon=%d samples=%d (%s space)\n",
                to_string(r.model).c_str(), r.seq_len, r.horizon, r.n_test_samples, space.c_str());
    std::printf("  MSE  = %.6g\n", r.mse);
    std::printf("  MAE  = %.6g\n", r.mae);
    std::printf("  MAPE = %.6g (excluded %d near-zero targets)\n", r.mape, r.mape_excluded);
    if (r.r2_defined) {
        std::printf("  R2   = %.6g\n", r.r2);
    } else {
        std::printf("  R2   = undefined (constant targets)\n");
    }
}

struct TrainArgs {
    std::string model;
    int seq_len = 0;
    int horizon = 0;
    std::string data;
    std::string config;
    std::string out = ".";
};

int run_train(const TrainArgs& args) {
    KeyValue kv;
    if (!args.config.empty()) kv = KeyValue::load(args.config);

    ModelConfig mc;
    mc.kind = model_kind_from_string(args.model);
    if (mc.kind == ModelKind::transformer) {
        mc.transformer = apply_transformer_keys(TransformerConfig{}, kv);
        mc.transformer.seq_len = args.seq_len;
        mc.transformer.horizon = args.horizon;
    } else {
        mc.recurrent = apply_recurrent_keys(RecurrentConfig{}, kv);
        mc.recurrent.cell = mc.kind;
        mc.recurrent.seq_len = args.seq_len;
        mc.recurrent.horizon = args.horizon;
    }
    mc.validate();
    TrainConfig tc = apply_train_keys(TrainConfig{}, kv);
    if (auto seed = env_seed()) tc.seed = *seed;

    const TimeSeries series = load_csv(args.data);
    const size_t need = static_cast<size_t>(args.seq_len + args.horizon);
    auto [train_ts, test_ts] = split_train_test(series, 0.70, need);
    const Scaler scaler = fit_minmax(train_ts.values);
    WindowedDataset train_w = make_windows(normalize(scaler, train_ts.values), args.seq_len,
                                           args.horizon);
    WindowedDataset test_w = make_windows(normalize(scaler, test_ts.values), args.seq_len,
                                          args.horizon);

    std::filesystem::create_directories(args.out);
    const std::string stem = args.model + "_seq" + std::to_string(args.seq_len) + "_h" +
                             std::to_string(args.horizon);
    FitSinks sinks;
    sinks.checkpoint_path = (std::filesystem::path(args.out) / (stem + ".ckpt")).string();
    sinks.history_csv_path =
        (std::filesystem::path(args.out) / ("history_" + stem + ".csv")).string();
    sinks.scaler = &scaler;

    std::printf("training %s: %zu train / %zu test windows, %d epochs\n", stem.c_str(),
                train_w.size(), test_w.size(), tc.epochs);
    FitModelResult fitted = fit_model(mc, train_w, test_w, tc, sinks);
    if (!fitted.history.epochs.empty()) {
        const auto& last = fitted.history.epochs.back();
        std::printf("final epoch %d: train_mse=%.6g test_mse=%.6g\n", last.epoch, last.train_mse,
                    last.test_mse);
    }
    print_metrics(evaluate(*fitted.model, test_w), "normalized");
    std::printf("checkpoint: %s\n", sinks.checkpoint_path.c_str());
    std::printf("history:    %s\n", sinks.history_csv_path.c_str());
    return 0;
}

struct EvaluateArgs {
    std::string checkpoint;
    std::string data;
    bool denorm = false;
    bool per_step = false;
};

int run_evaluate(const EvaluateArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    if (!ckpt.has_scaler) {
        throw DataError("checkpoint has no scaler; cannot normalize evaluation data");
    }
    auto model = make_forecaster(ckpt.config, std::move(ckpt.params));
    const TimeSeries series = load_csv(args.data);
    WindowedDataset windows = make_windows(normalize(ckpt.scaler, series.values),
                                           ckpt.config.seq_len(), ckpt.config.horizon());
    EvalOptions opts;
    opts.denormalize = args.denorm;
    opts.scaler = &ckpt.scaler;
    const std::string space = args.denorm ? "physical" : "normalized";
    if (args.per_step) {
        for (const auto& r : evaluate_per_step(*model, windows, opts)) {
            std::printf("-- horizon step %d --\n", r.horizon);
            print_metrics(r, space);
        }
    }
    print_metrics(evaluate(*model, windows, opts), space);
    return 0;
}

struct ForecastArgs {
    std::string checkpoint;
    std::string window_csv;
};

int run_forecast(const ForecastArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    if (!ckpt.has_scaler) {
        throw DataError("checkpoint has no scaler; cannot normalize the input window");
    }
    auto model = make_forecaster(ckpt.config, std::move(ckpt.params));
    const TimeSeries window_ts = load_csv(args.window_csv);
    const int L = ckpt.config.seq_len();
    if (static_cast<int>(window_ts.size()) != L) {
        throw DataError("forecast window has " + std::to_string(window_ts.size()) +
                        " rows, model expects exactly " + std::to_string(L));
    }
    const std::vector<double> norm = normalize(ckpt.scaler, window_ts.values);
    Tensor window = Tensor::from_vector({L, 1}, norm);
    Tape tape(false);
    Rng rng(0);
    Tensor pred = model->forward(tape, window, false, rng);
    std::printf("step,predicted\n");
    for (int i = 0; i < pred.size(); ++i) {
        std::printf("%d,%.10g\n", i + 1, ckpt.scaler.inverse(pred.at(i)));
    }
    return 0;
}

struct GenerateArgs {
    int n = 5000;
    uint64_t seed = 42;
    std::string profile = "diurnal-noise";
    std::string out;
};

int run_generate(const GenerateArgs& args) {
    uint64_t seed = args.seed;
    if (auto s = env_seed()) seed = *s;
    const TimeSeries ts = synthesize_series(args.n, seed, args.profile);
    save_csv(args.out, ts);
    std::printf("wrote %zu hourly samples (profile %s, seed %llu) to %s\n", ts.size(),
                args.profile.c_str(), static_cast<unsigned long long>(seed), args.out.c_str());
    return 0;
}

struct BenchArgs {
    std::string spec_path;
    std::string out_override;
    int jobs_override = 0;
};

int run_benchmark(const BenchArgs& args) {
    BenchmarkSpec spec = load_benchmark_spec(args.spec_path);
    if (!args.out_override.empty()) spec.out_dir = args.out_override;
    if (args.jobs_override > 0) spec.jobs = args.jobs_override;
    if (auto seed = env_seed()) spec.seed = *seed;

    std::printf("benchmark grid: %zu cells, out=%s, jobs=%d, seed=%llu\n", spec.cells.size(),
                spec.out_dir.c_str(), spec.jobs, static_cast<unsigned long long>(spec.seed));
    const auto results = run_benchmark_grid(spec);
    emit_report(results, spec.out_dir);
    int failed = 0;
    for (const auto& r : results) {
        if (r.ok) {
            std::printf("%-24s mse=%.6g mae=%.6g r2=%.6g\n", r.cell.name().c_str(), r.metrics.mse,
                        r.metrics.mae, r.metrics.r2);
        } else {
            ++failed;
            std::printf("%-24s FAILED: %s\n", r.cell.name().c_str(), r.error.c_str());
        }
    }
    std::printf("report: %s/table2.csv, %s/table2.md\n", spec.out_dir.c_str(),
                spec.out_dir.c_str());
    if (failed > 0) std::fprintf(stderr, "%d cell(s) failed\n", failed);
    return failed == 0 ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"EWPF: transformer and recurrent wind-power forecasting at desk scale"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train one model on a CSV series");
    train_cmd->add_option("--model", train_args.model, "transformer|lstm|gru")->required();
    train_cmd->add_option("--seq", train_args.seq_len, "input window length")->required();
    train_cmd->add_option("--horizon", train_args.horizon, "forecast steps (1 or 5)")->required();
    train_cmd->add_option("--data", train_args.data, "CSV with header timestamp,power")
        ->required();
    train_cmd->add_option("--config", train_args.config, "key-value config file");
    train_cmd->add_option("--out", train_args.out, "output directory");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a CSV series");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--data", eval_args.data, "CSV series")->required();
    eval_cmd->add_flag("--denorm", eval_args.denorm, "report metrics in physical units");
    eval_cmd->add_flag("--per-step", eval_args.per_step, "also report each horizon step");

    ForecastArgs fc_args;
    auto* fc_cmd = app.add_subcommand("forecast", "Forecast from one input window");
    fc_cmd->add_option("--checkpoint", fc_args.checkpoint, "checkpoint path")->required();
    fc_cmd->add_option("--window-csv", fc_args.window_csv, "CSV with exactly seq_len rows")
        ->required();

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic hourly series");
    gen_cmd->add_option("--n", gen_args.n, "number of samples");
    gen_cmd->add_option("--seed", gen_args.seed, "generator seed");
    gen_cmd->add_option("--profile", gen_args.profile, "sine|diurnal-noise");
    gen_cmd->add_option("--out", gen_args.out, "output CSV path")->required();

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("benchmark", "Run the model x sequence x step grid");
    bench_cmd->add_option("--spec", bench_args.spec_path, "benchmark spec file")->required();
    bench_cmd->add_option("--out", bench_args.out_override, "override output directory");
    bench_cmd->add_option("--jobs", bench_args.jobs_override, "override worker thread count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train_cmd) return run_train(train_args);
        if (*eval_cmd) return run_evaluate(eval_args);
        if (*fc_cmd) return run_forecast(fc_args);
        if (*gen_cmd) return run_generate(gen_args);
        if (*bench_cmd) return run_benchmark(bench_args);
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

}  // namespace ewpf
