#include "ugan/kernels/conv.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

using namespace ugan;
using namespace ugan::kernels;

namespace {

struct Buffers
{
  ConvGeom g;
  std::vector<double> x, w, y;

  Buffers(benchmark::State const &st)
    : g{st.range(0), st.range(0), st.range(1), st.range(1), 3, st.range(2)}
  {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    x.resize(g.c_in * g.h * g.w);
    w.resize(g.c_out * g.c_in * g.k * g.k);
    y.resize(g.c_out * g.out_h() * g.out_w());
    for (auto *v : {&x, &w, &y}) {
      for (auto &e : *v) {
        e = n(rng);
      }
    }
  }
};

void Flops(benchmark::State &st, ConvGeom const &g)
{
  st.counters["flops"] = benchmark::Counter(
    2.0 * g.c_out * g.c_in * g.k * g.k * g.out_h() * g.out_w(), benchmark::Counter::kIsIterationInvariantRate);
  st.counters["threads"] = omp_get_max_threads();
}

template <auto Fn> void Forward(benchmark::State &st)
{
  Buffers b(st);
  for (auto _ : st) {
    Fn(b.g, b.x.data(), b.w.data(), b.y.data());
    benchmark::DoNotOptimize(b.y.data());
  }
  Flops(st, b.g);
}

template <auto Fn> void InputGrad(benchmark::State &st)
{
  Buffers b(st);
  for (auto _ : st) {
    Fn(b.g, b.y.data(), b.w.data(), b.x.data());
    benchmark::DoNotOptimize(b.x.data());
  }
  Flops(st, b.g);
}

template <auto Fn> void WeightGrad(benchmark::State &st)
{
  Buffers b(st);
  for (auto _ : st) {
    Fn(b.g, b.x.data(), b.y.data(), b.w.data());
    benchmark::DoNotOptimize(b.w.data());
  }
  Flops(st, b.g);
}

// {features, side, stride}: generator blocks at 64 and 320 pixels, critic downsampling
void Shapes(benchmark::internal::Benchmark *b)
{
  b->Args({8, 64, 1})->Args({32, 64, 1})->Args({32, 64, 2})->Args({32, 320, 1})->Unit(benchmark::kMicrosecond);
}

} // namespace

BENCHMARK(Forward<serial::Forward>)->Apply(Shapes);
BENCHMARK(Forward<parallel::Forward>)->Apply(Shapes);
BENCHMARK(InputGrad<serial::InputGrad>)->Apply(Shapes);
BENCHMARK(InputGrad<parallel::InputGrad>)->Apply(Shapes);
BENCHMARK(WeightGrad<serial::WeightGrad>)->Apply(Shapes);
BENCHMARK(WeightGrad<parallel::WeightGrad>)->Apply(Shapes);

BENCHMARK_MAIN();
