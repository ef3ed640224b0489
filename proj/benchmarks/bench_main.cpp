#include <benchmark/benchmark.h>

#include <vector>

#include "lade/autodiff.hpp"
#include "lade/label_space.hpp"
#include "lade/losses.hpp"
#include "lade/rng.hpp"
#include "lade/synthetic.hpp"
#include "lade/trainer.hpp"

namespace {

using namespace lade;

struct BatchFixture {
    Matrix logits;
    std::vector<int> labels;
    LabelDistribution source = LabelDistribution::uniform(2);

    BatchFixture(int batch, int classes) : logits(batch, classes) {
        rng::Stream stream(1234);
        for (double& v : logits.data) v = stream.uniform(-3.0, 3.0);
        labels.resize(static_cast<std::size_t>(batch));
        for (int& y : labels) {
            y = static_cast<int>(stream.below(static_cast<std::uint64_t>(classes)));
        }
        std::vector<double> p(static_cast<std::size_t>(classes));
        double total = 0.0;
        for (double& v : p) {
            v = stream.uniform(0.1, 1.0);
            total += v;
        }
        for (double& v : p) v /= total;
        source = LabelDistribution(p);
    }
};

void BM_lade_loss_forward_backward(benchmark::State& state) {
    const BatchFixture fixture(static_cast<int>(state.range(0)), 10);
    LadeConfig config = LadeConfig::defaults(fixture.source);
    for (auto _ : state) {
        const Tensor logits = Tensor::from_matrix(fixture.logits);
        Tensor loss = lade_loss(logits, fixture.labels, fixture.source, config);
        backward(loss);
        benchmark::DoNotOptimize(logits.grad().data());
    }
}
BENCHMARK(BM_lade_loss_forward_backward)->Arg(64)->Arg(256);

void BM_softmax_ce_forward_backward(benchmark::State& state) {
    const BatchFixture fixture(static_cast<int>(state.range(0)), 10);
    for (auto _ : state) {
        const Tensor logits = Tensor::from_matrix(fixture.logits);
        Tensor loss = softmax_ce(logits, fixture.labels);
        backward(loss);
        benchmark::DoNotOptimize(logits.grad().data());
    }
}
BENCHMARK(BM_softmax_ce_forward_backward)->Arg(64)->Arg(256);

void BM_pc_softmax(benchmark::State& state) {
    const BatchFixture fixture(static_cast<int>(state.range(0)), 10);
    const LabelDistribution uniform = LabelDistribution::uniform(10);
    for (auto _ : state) {
        Matrix probs = pc_softmax_probs(fixture.logits, fixture.source, uniform);
        benchmark::DoNotOptimize(probs.data.data());
    }
}
BENCHMARK(BM_pc_softmax)->Arg(256)->Arg(4096);

void BM_bayes_posterior(benchmark::State& state) {
    const MixtureWorld world = make_world(10, 2, 2.5, 1.0, 7);
    const Dataset pool = sample(world, make_uniform_profile(10, 64), 3);
    const LabelDistribution uniform = LabelDistribution::uniform(10);
    for (auto _ : state) {
        Matrix posterior = bayes_posterior_matrix(world, pool.features, uniform);
        benchmark::DoNotOptimize(posterior.data.data());
    }
}
BENCHMARK(BM_bayes_posterior);

void BM_train_epoch(benchmark::State& state) {
    const MixtureWorld world = make_world(10, 2, 2.5, 1.0, 7);
    const Dataset data = sample(world, make_longtail(10, 200, 100.0), 3);
    const ModelParams initial = init_model(std::vector<int>{2, 64, 10}, 11);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 64;
    config.loss = LossKind::kLade;
    for (auto _ : state) {
        TrainResult result = train(initial, data, config);
        benchmark::DoNotOptimize(result.params.weights[0].data.data());
    }
}
BENCHMARK(BM_train_epoch);

}  // namespace

BENCHMARK_MAIN();
