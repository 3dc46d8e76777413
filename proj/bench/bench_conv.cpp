// Serial reference kernels against the OpenMP ones on a default-sized layer.
#include <benchmark/benchmark.h>

#include "questcnn/nn/layers.hpp"
#include "questcnn/nn/reference.hpp"

namespace {

using namespace questcnn;
using nn::Array2;

struct Fixture {
  std::vector<nn::Channels> batch;
  nn::ConvBank bank;
  std::vector<Array2> dz;

  Fixture(std::size_t batch_size, std::size_t maps) : bank(4, 3, 300, maps) {
    Rng rng(7);
    const std::size_t n = 40;
    batch.resize(batch_size);
    for (auto& s : batch)
      for (int c = 0; c < 3; ++c) {
        Array2 m(n, 300);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-0.1, 0.1);
        s.push_back(std::move(m));
      }
    for (std::size_t i = 0; i < bank.weights.size(); ++i) bank.weights[i] = rng.uniform(-0.05, 0.05);
    dz.assign(batch_size, Array2(maps, n - 4 + 1));
    for (auto& d : dz)
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform(-1.0, 1.0);
  }
};

void BM_ConvForwardSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 160);
  std::vector<Array2> out;
  for (auto _ : state) {
    nn::reference::conv_bank_forward(f.batch, f.bank, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvForwardParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 160);
  std::vector<Array2> out;
  for (auto _ : state) {
    nn::conv_bank_forward(f.batch, f.bank, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvBackwardSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 160);
  nn::ConvBank grad = f.bank;
  for (auto _ : state) {
    grad.weights.fill(0.0);
    grad.bias.fill(0.0);
    nn::reference::conv_bank_backward(f.batch, f.bank, f.dz, grad, nullptr);
    benchmark::DoNotOptimize(grad.weights.data());
  }
}

void BM_ConvBackwardParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 160);
  nn::ConvBank grad = f.bank;
  for (auto _ : state) {
    grad.weights.fill(0.0);
    grad.bias.fill(0.0);
    nn::conv_bank_backward(f.batch, f.bank, f.dz, grad, nullptr);
    benchmark::DoNotOptimize(grad.weights.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForwardSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
