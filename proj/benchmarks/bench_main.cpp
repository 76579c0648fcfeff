#include "gazeseg/backend.hpp"
#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/image_volume.hpp"
#include "gazeseg/prompt.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gazeseg;

namespace {

std::vector<GazeSample> stream(std::size_t n)
{
    ScanpathSpec spec;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(0, 1000);
    while (spec.targets.size() * 15 < n)
        spec.targets.push_back({{pos(rng), pos(rng)}, 250, 2});
    auto s = simulate_scanpath(spec, 7);
    s.resize(std::min(s.size(), n));
    return s;
}

ImageVolume volume(int n)
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> noise(-4, 4);
    std::vector<std::int16_t> vox(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const int dx = x - n / 2, dy = y - n / 2;
            const int base = dx * dx + dy * dy < n * n / 9 ? 300 : 40;
            vox[static_cast<std::size_t>(y) * n + x] = static_cast<std::int16_t>(base + noise(rng));
        }
    return ImageVolume(n, n, 1, Spacing{}, std::move(vox));
}

const std::vector<PromptPoint> kCentre{{256, 256, PointLabel::Foreground, 0}};

} // namespace

static void BM_FixationDetector(benchmark::State& state)
{
    const auto s = stream(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        FixationDetector det({30.0, 100'000});
        std::size_t n = 0;
        for (const auto& x : s)
            n += det.push(x).has_value();
        benchmark::DoNotOptimize(n);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_FixationDetector)->Arg(600)->Arg(60'000);

static void BM_RegionGrow(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const auto vol = volume(n);
    const auto slice = vol.slice(0);
    const std::vector<PromptPoint> seeds{{n / 2, n / 2, PointLabel::Foreground, 0},
                                         {n / 2 + 5, n / 2 - 7, PointLabel::Foreground, 0},
                                         {3, 3, PointLabel::Foreground, 0}};
    const double tol = default_tolerance(slice);
    for (auto _ : state)
        benchmark::DoNotOptimize(region_grow_reference(slice, seeds, tol));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_RegionGrow)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_RleEncode(benchmark::State& state)
{
    const auto vol = volume(512);
    const auto mask = region_grow_reference(vol.slice(0), kCentre, 20.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(rle_encode(mask));
    state.SetBytesProcessed(state.iterations() * 512 * 512);
}
BENCHMARK(BM_RleEncode);

static void BM_RleDecode(benchmark::State& state)
{
    const auto vol = volume(512);
    const auto runs = rle_encode(region_grow_reference(vol.slice(0), kCentre, 20.0));
    for (auto _ : state)
        benchmark::DoNotOptimize(rle_decode(runs, 512, 512));
    state.SetBytesProcessed(state.iterations() * 512 * 512);
}
BENCHMARK(BM_RleDecode);
BENCHMARK_MAIN();
