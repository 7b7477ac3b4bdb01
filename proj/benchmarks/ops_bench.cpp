#include <benchmark/benchmark.h>

#include "ewpf/attention.hpp"
#include "ewpf/checkpoint.hpp"
#include "ewpf/training.hpp"

namespace {

using namespace ewpf;

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.data_mut()) v = rng.normal();
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor a = random_tensor({n, n}, rng);
    Tensor b = random_tensor({n, n}, rng);
    Tape tape(false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(tape, a, b));
    }
    state.SetItemsProcessed(state.iterations() * int64_t{2} * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_MultiHeadAttention(benchmark::State& state) {
    const int seq = static_cast<int>(state.range(0));
    const int d_model = 64;
    Rng rng(2);
    MultiHeadWeights w = MultiHeadWeights::from(
        random_tensor({d_model, d_model}, rng), random_tensor({d_model, d_model}, rng),
        random_tensor({d_model, d_model}, rng), random_tensor({d_model, d_model}, rng), 4);
    Tensor x = random_tensor({seq, d_model}, rng);
    for (auto _ : state) {
        Tape tape(false);
        benchmark::DoNotOptimize(multi_head_attention(tape, x, x, w, nullptr, 0.0, false, rng));
    }
}
BENCHMARK(BM_MultiHeadAttention)->Arg(10)->Arg(20)->Arg(50);

void BM_TransformerTrainStep(benchmark::State& state) {
    TransformerConfig cfg;
    cfg.d_model = 32;
    cfg.n_heads = 4;
    cfg.n_layers = 2;
    cfg.d_ff = 64;
    cfg.seq_len = static_cast<int>(state.range(0));
    cfg.horizon = 1;
    TransformerModel model(cfg, 3);
    Rng rng(4);
    Tensor window = random_tensor({cfg.seq_len, 1}, rng);
    for (double& v : window.data_mut()) v = std::tanh(v);  // keep inputs in [-1, 1]
    Tensor target = Tensor::full({1, 1}, 0.25);
    TrainConfig tc;
    AdamState adam;
    adam.init(model.parameters());
    for (auto _ : state) {
        Tape tape;
        Tensor pred = model.forward(tape, window, true, rng);
        Tensor loss = mse_loss(tape, pred, target);
        model.parameters().zero_grad();
        tape.backward(loss);
        adam_step(model.parameters(), adam, tc);
    }
}
BENCHMARK(BM_TransformerTrainStep)->Arg(10)->Arg(20)->Arg(50);

void BM_LstmForward(benchmark::State& state) {
    RecurrentConfig cfg;
    cfg.hidden = 32;
    cfg.layers = 2;
    cfg.cell = ModelKind::lstm;
    cfg.seq_len = static_cast<int>(state.range(0));
    cfg.horizon = 1;
    RecurrentModel model(cfg, 5);
    Rng rng(6);
    Tensor window = random_tensor({cfg.seq_len, 1}, rng);
    for (double& v : window.data_mut()) v = std::tanh(v);
    for (auto _ : state) {
        Tape tape(false);
        benchmark::DoNotOptimize(model.forward(tape, window, false, rng));
    }
}
BENCHMARK(BM_LstmForward)->Arg(10)->Arg(20)->Arg(50);

void BM_AdamStep(benchmark::State& state) {
    TransformerConfig cfg;
    cfg.d_model = 64;
    cfg.n_heads = 4;
    cfg.n_layers = 2;
    cfg.d_ff = 128;
    cfg.seq_len = 20;
    TransformerModel model(cfg, 7);
    for (auto& item : model.parameters().items()) {
        auto g = item.tensor.grad_mut();
        for (size_t i = 0; i < g.size(); ++i) g[i] = 1e-3;
    }
    TrainConfig tc;
    AdamState adam;
    adam.init(model.parameters());
    for (auto _ : state) {
        adam_step(model.parameters(), adam, tc);
    }
    state.SetItemsProcessed(state.iterations() * model.parameters().total_scalars());
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
