#include <benchmark/benchmark.h>

#include "gmvae/eval.hpp"
#include "gmvae/objective.hpp"

using namespace gmvae;

namespace {

GmvaeParams bench_model(int k) {
    const ModelConfig cfg = ModelConfig::make(2, {k, k}, 16, 2, 2);
    Arch arch;
    arch.trunk_widths = {64, 64};
    arch.reduce_dim = 16;
    return make_gmvae(cfg, arch, 1);
}

void BM_MatmulBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    Tensor a({n, n}, rng.normal_vector(n * n));
    Tensor b({n, n}, rng.normal_vector(n * n));
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        Tape tape;
        tape.backward(sum(matmul(a, b)));
        benchmark::DoNotOptimize(a.grad_at(0));
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64);

void BM_ElboForward(benchmark::State& state) {
    const GmvaeParams params = bench_model(2);
    Rng rng(5);
    std::vector<double> x(16);
    for (auto& v : x) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const Tensor xt({16}, x);
    for (auto _ : state) {
        const ElboTerms terms = elbo_terms(params, xt, 1, 1, rng);
        benchmark::DoNotOptimize(loss_no_vprior(terms).scalar_value());
    }
}
BENCHMARK(BM_ElboForward);

void BM_ElboTrainStep(benchmark::State& state) {
    GmvaeParams params = bench_model(2);
    Adam adam(params.parameters(), {});
    Rng rng(7);
    std::vector<double> x(16);
    for (auto& v : x) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const Tensor xt({16}, x);
    for (auto _ : state) {
        adam.zero_grad();
        Tape tape;
        Tensor loss = loss_no_vprior(elbo_terms(params, xt, 1, 1, rng));
        tape.backward(loss);
        adam.step();
        benchmark::DoNotOptimize(loss.scalar_value());
    }
}
BENCHMARK(BM_ElboTrainStep);

void BM_Kmeans(benchmark::State& state) {
    Rng rng(11);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 512; ++i)
        points.push_back({rng.normal() + (i % 4) * 8.0, rng.normal()});
    for (auto _ : state) {
        const auto centers = kmeans(points, 4, 13);
        benchmark::DoNotOptimize(centers[0][0]);
    }
}
BENCHMARK(BM_Kmeans);

void BM_VPosterior(benchmark::State& state) {
    const GmvaeParams params = bench_model(4);
    Rng rng(13);
    const Tensor z({2}, rng.normal_vector(2));
    const Tensor w({2}, rng.normal_vector(2));
    for (auto _ : state) {
        const Tensor probs = v_posterior(params, z, w, 1);
        benchmark::DoNotOptimize(probs.at(0));
    }
}
BENCHMARK(BM_VPosterior);

} // namespace

BENCHMARK_MAIN();
