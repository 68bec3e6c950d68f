#include <random>

#include <benchmark/benchmark.h>

#include "taso/nn.hpp"
#include "taso/optim.hpp"
#include "taso/schedule.hpp"

using namespace taso;

static void BM_TasoCurve(benchmark::State& state) {
    const auto cfg = schedule::default_config(0.05, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        double sum = 0.0;
        for (std::size_t k = 1; k <= cfg.total_epochs; ++k) sum += schedule::taso_lr(cfg, k);
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TasoCurve)->Arg(100)->Arg(10000);

static void BM_OptimizerStep(benchmark::State& state) {
    const auto rule = optim::kAllRules[state.range(0)];
    const std::size_t n = 1 << 16;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> dist;
    Tensor param({n}), grad({n});
    for (std::size_t i = 0; i < n; ++i) {
        param[i] = dist(rng);
        grad[i] = dist(rng);
    }
    optim::Optimizer opt({rule, {}});
    Tensor* params[] = {&param};
    const Tensor* grads[] = {&grad};
    for (auto _ : state) {
        opt.step(params, grads, 1e-4);
        benchmark::ClobberMemory();
    }
    state.SetLabel(std::string(optim::to_string(rule)));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_OptimizerStep)->DenseRange(0, 7);

static Tensor random_batch(Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = dist(rng);
    return t;
}

static void BM_Conv2dForwardBackward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    nn::Conv2d conv({1, 6, 5, 1, 0});
    std::mt19937_64 rng(3);
    conv.initialize(nn::Init::glorot_uniform, rng);
    const Tensor x = random_batch({batch, 1, 28, 28}, 4);
    for (auto _ : state) {
        nn::LayerCache cache;
        Tensor y = conv.forward(x, &cache);
        Tensor dx = conv.backward(x, y, y, cache, true);
        benchmark::DoNotOptimize(dx.data());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(32)->Arg(128);

static void BM_LeNet5TrainStep(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    nn::Network net = nn::build_lenet5(10, 5);
    optim::Optimizer opt({optim::Rule::momentum, {}});
    const Tensor x = random_batch({batch, 1, 28, 28}, 6);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 10);
    for (auto _ : state) {
        nn::ForwardPass pass = nn::forward(net, x);
        benchmark::DoNotOptimize(nn::loss_and_backward(net, pass, labels));
        auto params = net.parameters();
        auto grads = net.gradients();
        opt.step(params, grads, 0.01);
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LeNet5TrainStep)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
