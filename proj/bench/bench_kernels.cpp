// Serial reference vs OpenMP kernels at the shapes the desk and paper
// profiles use, plus one full training window.
#include <benchmark/benchmark.h>

#include <vector>

#include "levelseq/kernels.hpp"
#include "levelseq/lstm.hpp"
#include "levelseq/rng.hpp"

namespace k = levelseq::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  levelseq::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// args: rows (layer input), cols (4 x hidden)
template <bool Parallel>
void BM_accumulate_rows(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  auto w = random_vec(rows * cols, 1);
  auto x = random_vec(rows, 2);
  std::vector<double> y(cols, 0.0);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::accumulate_rows({w.data(), rows, cols}, x, y);
    } else {
      k::serial::accumulate_rows({w.data(), rows, cols}, x, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

template <bool Parallel>
void BM_dot_rows(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  auto w = random_vec(rows * cols, 3);
  auto v = random_vec(cols, 4);
  std::vector<double> out(rows, 0.0);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::dot_rows({w.data(), rows, cols}, v, out);
    } else {
      k::serial::dot_rows({w.data(), rows, cols}, v, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

template <bool Parallel>
void BM_outer_accumulate_batch(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const std::size_t steps = 200;
  auto w = random_vec(rows * cols, 5);
  auto x = random_vec(steps * rows, 6);
  auto v = random_vec(steps * cols, 7);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::outer_accumulate_batch({w.data(), rows, cols}, {x.data(), steps, rows}, {v.data(), steps, cols});
    } else {
      k::serial::outer_accumulate_batch({w.data(), rows, cols}, {x.data(), steps, rows}, {v.data(), steps, cols});
    }
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols * steps));
}

template <bool Parallel>
void BM_accumulate_rows_batch(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const std::size_t steps = 200;
  auto w = random_vec(rows * cols, 8);
  auto x = random_vec(steps * rows, 9);
  std::vector<double> y(steps * cols, 0.0);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::accumulate_rows_batch({w.data(), rows, cols}, {x.data(), steps, rows}, {y.data(), steps, cols});
    } else {
      k::serial::accumulate_rows_batch({w.data(), rows, cols}, {x.data(), steps, rows}, {y.data(), steps, cols});
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols * steps));
}

// one bptt window of the desk model; arg: hidden width
void BM_training_window(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  auto model = levelseq::LstmModel::initialized(18, {hidden, hidden}, 0.25, 1);
  levelseq::Rng data(2);
  std::vector<int> window(201);
  for (int& t : window) t = static_cast<int>(data.below(18));
  std::vector<double> grads(model.num_params());
  levelseq::Rng dropout(3);
  for (auto _ : state) {
    auto s = levelseq::LstmState::zeros(model);
    benchmark::DoNotOptimize(levelseq::loss_and_grads(model, window, s, &dropout, grads, 5.0));
  }
  state.SetItemsProcessed(state.iterations() * 200);
}

const std::vector<std::vector<std::int64_t>> kShapes = {{128, 512}, {256, 512}, {512, 2048}, {1024, 2048}};

}  // namespace

BENCHMARK(BM_accumulate_rows<false>)->ArgsProduct(kShapes)->Name("accumulate_rows/serial");
BENCHMARK(BM_accumulate_rows<true>)->ArgsProduct(kShapes)->Name("accumulate_rows/parallel");
BENCHMARK(BM_dot_rows<false>)->ArgsProduct(kShapes)->Name("dot_rows/serial");
BENCHMARK(BM_dot_rows<true>)->ArgsProduct(kShapes)->Name("dot_rows/parallel");
BENCHMARK(BM_accumulate_rows_batch<false>)->Args({128, 512})->Args({512, 2048})->Name("accumulate_rows_batch/serial");
BENCHMARK(BM_accumulate_rows_batch<true>)->Args({128, 512})->Args({512, 2048})->Name("accumulate_rows_batch/parallel");
BENCHMARK(BM_outer_accumulate_batch<false>)->Args({128, 512})->Args({512, 2048})->Name("outer_accumulate_batch/serial");
BENCHMARK(BM_outer_accumulate_batch<true>)->Args({128, 512})->Args({512, 2048})->Name("outer_accumulate_batch/parallel");
BENCHMARK(BM_training_window)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
