// Serial reference vs OpenMP kernels on the shapes the encoders use.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "clasp/numerics/kernels.hpp"

namespace k = clasp::numerics::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::gemm(false, false, n, n, n, a.data(), b.data(), c.data());
    } else {
      k::serial::gemm(false, false, n, n, n, a.data(), b.data(), c.data());
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}

// second encoder layer on a batch of 2048-sample signals
k::Conv1dGeometry layer_geometry(std::size_t batch) {
  k::Conv1dGeometry g;
  g.batch = batch;
  g.in_channels = 32;
  g.out_channels = 64;
  g.length = 1024;
  g.kernel = 7;
  g.stride = 2;
  g.padding = 3;
  return g;
}

template <bool Parallel>
void BM_conv_forward(benchmark::State& state) {
  const auto g = layer_geometry(static_cast<std::size_t>(state.range(0)));
  const auto x = random_vec(g.batch * g.in_channels * g.length, 3);
  const auto w = random_vec(g.out_channels * g.patch(), 4);
  const auto b = random_vec(g.out_channels, 5);
  std::vector<float> y(g.batch * g.out_channels * g.out_length());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::conv1d_forward(g, x.data(), w.data(), b.data(), y.data());
    } else {
      k::serial::conv1d_forward(g, x.data(), w.data(), b.data(), y.data());
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_conv_backward(benchmark::State& state) {
  const auto g = layer_geometry(static_cast<std::size_t>(state.range(0)));
  const auto x = random_vec(g.batch * g.in_channels * g.length, 3);
  const auto w = random_vec(g.out_channels * g.patch(), 4);
  const auto dy = random_vec(g.batch * g.out_channels * g.out_length(), 6);
  std::vector<float> dx(x.size()), dw(w.size()), db(g.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::conv1d_backward(g, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
    } else {
      k::serial::conv1d_backward(g, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool Parallel>
void BM_row_dots(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 64;
  const auto m = random_vec(rows * dim, 7), q = random_vec(dim, 8);
  std::vector<float> s(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::row_dots(rows, dim, m.data(), q.data(), s.data());
    } else {
      k::serial::row_dots(rows, dim, m.data(), q.data(), s.data());
    }
    benchmark::DoNotOptimize(s.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_conv_forward<false>)->Name("conv1d_forward/serial")->Arg(4);
BENCHMARK(BM_conv_forward<true>)->Name("conv1d_forward/parallel")->Arg(4);
BENCHMARK(BM_conv_backward<false>)->Name("conv1d_backward/serial")->Arg(4);
BENCHMARK(BM_conv_backward<true>)->Name("conv1d_backward/parallel")->Arg(4);
BENCHMARK(BM_row_dots<false>)->Name("row_dots/serial")->Arg(10000);
BENCHMARK(BM_row_dots<true>)->Name("row_dots/parallel")->Arg(10000);

BENCHMARK_MAIN();
