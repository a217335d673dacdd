// Serial reference vs OpenMP kernels. Argument = image height; width is 2x.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "lidas/kernels.hpp"
#include "lidas/photometry.hpp"

namespace k = lidas::kernels;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

struct Frame {
  k::Dims d;
  std::vector<float> full, off, field;
  explicit Frame(int h) : d{h, 2 * h, 3} {
    full = noise(d.pixels() * 3, 1);
    off = noise(d.pixels() * 3, 2);
    field = noise(d.pixels(), 3);
  }
};

template <bool Parallel>
void BM_relight(benchmark::State& state) {
  const Frame f(static_cast<int>(state.range(0)));
  std::vector<float> out(f.full.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::relight(f.full, f.off, f.field, f.d, out);
    } else {
      k::serial::relight(f.full, f.off, f.field, f.d, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.d.pixels()));
}

template <bool Parallel>
void BM_relight_gradient(benchmark::State& state) {
  const Frame f(static_cast<int>(state.range(0)));
  const std::vector<double> up(f.full.begin(), f.full.end());
  std::vector<double> out(f.d.pixels());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::relight_gradient(f.full, f.off, up, f.d, out);
    } else {
      k::serial::relight_gradient(f.full, f.off, up, f.d, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.d.pixels()));
}

template <bool Parallel>
void BM_mean(benchmark::State& state) {
  const Frame f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    double m = Parallel ? k::parallel::mean(f.field, f.d.width) : k::serial::mean(f.field, f.d.width);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.d.pixels()));
}

template <bool Parallel>
void BM_project_beam(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  lidas::CameraModel cam{240.0 * h / 80, 240.0 * h / 80, (2 * h - 1) / 2.0, 28.0 * h / 80, 2 * h, h};
  const lidas::AngularIntensityTable phi = lidas::synthetic_low_beam();
  const lidas::HeadlightModel hl = lidas::default_headlight(phi);
  const k::BeamArgs args = lidas::beam_args(cam, hl);
  const k::Dims d{h, 2 * h, 1};
  std::vector<float> depth(d.pixels());
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = 5.0F + static_cast<float>(i % 97);
  std::vector<float> out(d.pixels());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::project_beam(args, depth, d, out);
    } else {
      k::serial::project_beam(args, depth, d, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.pixels()));
}

}  // namespace

BENCHMARK(BM_relight<false>)->Arg(80)->Arg(540);
BENCHMARK(BM_relight<true>)->Arg(80)->Arg(540);
BENCHMARK(BM_relight_gradient<false>)->Arg(80)->Arg(540);
BENCHMARK(BM_relight_gradient<true>)->Arg(80)->Arg(540);
BENCHMARK(BM_mean<false>)->Arg(80)->Arg(540);
BENCHMARK(BM_mean<true>)->Arg(80)->Arg(540);
BENCHMARK(BM_project_beam<false>)->Arg(80)->Arg(540);
BENCHMARK(BM_project_beam<true>)->Arg(80)->Arg(540);

BENCHMARK_MAIN();
