// Serial-reference vs. OpenMP kernel comparison for the per-pixel hot loops.

#include <benchmark/benchmark.h>

#include "enhance/color.hpp"
#include "enhance/rng.hpp"
#include "enhance/transform.hpp"

namespace {

using namespace enhance;

ImageBuffer random_image(int side, uint64_t seed) {
    Rng rng(seed);
    ImageBuffer img(side, side);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

CoefficientMatrix random_theta(uint64_t seed) {
    Rng rng(seed);
    CoefficientMatrix theta;
    for (double& t : theta.theta) t = rng.uniform(-0.05, 0.05);
    return theta;
}

void BM_ApplyTransformSerial(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    ImageBuffer img = random_image(side, 1);
    CoefficientMatrix theta = random_theta(2);
    for (auto _ : state) {
        ImageBuffer out = detail::apply_transform_serial(img, theta, /*clamp=*/true);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(img.pixel_count()));
}

void BM_ApplyTransformParallel(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    ImageBuffer img = random_image(side, 1);
    CoefficientMatrix theta = random_theta(2);
    for (auto _ : state) {
        ImageBuffer out = apply_transform(img, theta);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(img.pixel_count()));
}

void BM_MeanLabL2Serial(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    ImageBuffer a = random_image(side, 3);
    ImageBuffer b = random_image(side, 4);
    for (auto _ : state) {
        double v = detail::mean_lab_l2_serial(a, b);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(a.pixel_count()));
}

void BM_MeanLabL2Parallel(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    ImageBuffer a = random_image(side, 3);
    ImageBuffer b = random_image(side, 4);
    for (auto _ : state) {
        double v = mean_lab_l2(a, b);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(a.pixel_count()));
}

BENCHMARK(BM_ApplyTransformSerial)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyTransformParallel)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanLabL2Serial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanLabL2Parallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
