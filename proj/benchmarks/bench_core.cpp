#include <benchmark/benchmark.h>

#include "gradforge/harness.hpp"

using namespace gradforge;

namespace {

Tensor random_batch(int n, int hw, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t = Tensor::zeros({n, hw, hw, 3});
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(0.0, 1.0);
    return t;
}

ModelConfig desk_cfg(int hw) {
    ModelConfig cfg;
    cfg.input_hw = hw;
    cfg.input_channels = 3;
    cfg.num_classes = 10;
    cfg.width_scale = 0.25;
    cfg.seed = 1;
    return cfg;
}

std::vector<int> labels_for(int n) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % 10;
    return y;
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    Rng rng(2);
    Tensor x = random_batch(8, hw, 3);
    Tensor w = xavier_init(27, 108, {3, 3, 3, 12}, rng);
    Tensor b = Tensor::zeros({12});
    for (auto _ : state) {
        Tensor out = conv2d(x, w, b, 1);
        benchmark::DoNotOptimize(out.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Arg(32);

static void BM_ClassifierForward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    Network net = build_classifier(desk_cfg(hw));
    Tensor x = random_batch(16, hw, 4);
    for (auto _ : state) {
        Tensor probs = net.forward(x);
        benchmark::DoNotOptimize(probs.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ClassifierForward)->Arg(8)->Arg(16);

static void BM_ClassifierBackward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    Network net = build_classifier(desk_cfg(hw));
    Tensor x = random_batch(16, hw, 5);
    std::vector<int> y = labels_for(16);
    for (auto _ : state) {
        Tape tape;
        ForwardOptions opt;
        opt.tape = &tape;
        opt.track_params = true;
        Tensor loss = cross_entropy(net.forward(x, opt), y);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad_of(net.params()[0].w).data->data());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ClassifierBackward)->Arg(8)->Arg(16);

static void BM_GeneratorForward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    Network gen = build_generator(desk_cfg(hw));
    Tensor x = random_batch(16, hw, 6);
    for (auto _ : state) {
        Tensor eta = gen.forward(x);
        benchmark::DoNotOptimize(eta.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_GeneratorForward)->Arg(8)->Arg(16);

static void BM_FgsmBatch(benchmark::State& state) {
    Network net = build_classifier(desk_cfg(16));
    Tensor x = random_batch(16, 16, 7);
    std::vector<int> y = labels_for(16);
    for (auto _ : state) {
        PerturbationBatch pb = fgsm(net, x, y, 0.05);
        benchmark::DoNotOptimize(pb.eta.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_FgsmBatch);

static void BM_GatPerturbBatch(benchmark::State& state) {
    Network F = build_classifier(desk_cfg(16));
    Network G = build_generator(desk_cfg(16));
    Tensor x = random_batch(16, 16, 8);
    std::vector<int> y = labels_for(16);
    for (auto _ : state) {
        PerturbationBatch pb = gat_perturb(G, F, x, y);
        benchmark::DoNotOptimize(pb.eta.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_GatPerturbBatch);

static void BM_AdamStep(benchmark::State& state) {
    Network net = build_classifier(desk_cfg(16));
    Tensor x = random_batch(8, 16, 9);
    std::vector<int> y = labels_for(8);
    Tape tape;
    ForwardOptions opt;
    opt.tape = &tape;
    opt.track_params = true;
    Tensor loss = cross_entropy(net.forward(x, opt), y);
    tape.backward(loss);
    std::vector<Tensor> grads;
    for (const ConvParam& p : net.params()) {
        grads.push_back(tape.grad_of(p.w));
        grads.push_back(tape.grad_of(p.b));
    }
    AdamState st;
    st.init(net.params());
    for (auto _ : state) {
        adam_step(net.params(), grads, st, 1e-3, 0.9, 0.999, 1e-8);
        benchmark::DoNotOptimize(net.params()[0].w.data->data());
    }
}
BENCHMARK(BM_AdamStep);

BENCHMARK_MAIN();
