// Serial reference vs OpenMP kernels on blob data shaped like mask
// embeddings (d = 768).

#include <benchmark/benchmark.h>

#include <vector>

#include "relclust/kernels.hpp"
#include "synth.hpp"

namespace {

using namespace relclust;

constexpr std::size_t kDim = 768;

const synth::Blobs& data(std::size_t n) {
    static std::vector<std::pair<std::size_t, synth::Blobs>> cache;
    for (const auto& [size, b] : cache)
        if (size == n) return b;
    cache.emplace_back(n, synth::make_blobs(20, static_cast<int>(n / 20), kDim, 1));
    return cache.back().second;
}

std::vector<double> centroids_of(const synth::Blobs& b, std::size_t k) {
    std::vector<double> c(k * b.dim);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = b.points[i];
    return c;
}

template <auto Fn>
void assign_nearest(benchmark::State& state) {
    const auto& b = data(static_cast<std::size_t>(state.range(0)));
    const std::size_t k = static_cast<std::size_t>(state.range(1));
    const std::vector<double> c = centroids_of(b, k);
    std::vector<int> labels(b.n);
    std::vector<double> dist(b.n);
    for (auto _ : state) {
        Fn(b.view(), c, k, labels, dist);
        benchmark::DoNotOptimize(dist.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.n * k));
}

template <auto Fn>
void pairwise(benchmark::State& state) {
    const auto& b = data(static_cast<std::size_t>(state.range(0)));
    std::vector<double> out(b.n * b.n);
    for (auto _ : state) {
        Fn(b.view(), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.n * b.n));
}

template <auto Fn>
void distances_to(benchmark::State& state) {
    const auto& b = data(static_cast<std::size_t>(state.range(0)));
    const std::size_t m = static_cast<std::size_t>(state.range(1));
    const MatrixView queries(std::span<const float>(b.points).subspan(0, m * b.dim), m, b.dim);
    std::vector<double> out(b.n * m);
    for (auto _ : state) {
        Fn(b.view(), queries, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.n * m));
}

template <auto Fn>
void silhouette(benchmark::State& state) {
    const auto& b = data(static_cast<std::size_t>(state.range(0)));
    std::vector<double> out(b.n);
    for (auto _ : state) {
        Fn(b.view(), b.labels, 20, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.n * b.n));
}

}  // namespace

BENCHMARK(assign_nearest<kernels::serial::assign_nearest>)->Name("assign_nearest/serial")->Args({4000, 20})->Args({4000, 120});
BENCHMARK(assign_nearest<kernels::omp::assign_nearest>)->Name("assign_nearest/omp")->Args({4000, 20})->Args({4000, 120});
BENCHMARK(distances_to<kernels::serial::squared_distances_to>)->Name("squared_distances_to/serial")->Args({4000, 5});
BENCHMARK(distances_to<kernels::omp::squared_distances_to>)->Name("squared_distances_to/omp")->Args({4000, 5});
BENCHMARK(pairwise<kernels::serial::pairwise_distances>)->Name("pairwise_distances/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(pairwise<kernels::omp::pairwise_distances>)->Name("pairwise_distances/omp")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(silhouette<kernels::serial::silhouette_samples>)->Name("silhouette_samples/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(silhouette<kernels::omp::silhouette_samples>)->Name("silhouette_samples/omp")->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
