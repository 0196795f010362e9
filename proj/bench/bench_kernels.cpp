// Serial reference kernels against their OpenMP counterparts.
//
//   bench_kernels --benchmark_filter=posterior
//
// The argument is the number of examinees (posterior, item weights) or
// items (fit); OMP_NUM_THREADS sets the thread count of the parallel runs.

#include "nirt/em.hpp"
#include "nirt/sim.hpp"

#include <benchmark/benchmark.h>

using namespace nirt;

namespace {

struct Fixture
{
  sim::SimDataset data;
  SoftAssignment assignment;
  MStepResult m;
};

Fixture make_fixture(std::size_t examinees, std::size_t items)
{
  sim::SimConfig config;
  config.n_examinees = examinees;
  config.n_items = items;
  config.rho = 0.5;
  config.seed = 1;
  auto data = sim::generate(config);
  auto assignment = initialize_assignment(data.responses, 10);
  EmConfig em;
  em.model = ModelKind::Scm;
  em.budget = SmoothnessBudget::bounded(2.0);
  auto m = m_step(data.responses, assignment, em, std::nullopt);
  return {std::move(data), std::move(assignment), std::move(m)};
}

std::vector<double> log_sizes(const ClassSizes& sizes)
{
  std::vector<double> out(sizes.n_classes());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = std::log(sizes[t]);
  }
  return out;
}

void posterior(benchmark::State& state, kernels::Execution ex)
{
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 60);
  const auto log_pi = log_sizes(f.m.sizes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::posterior(ex, f.data.responses, f.m.logits, log_pi));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void item_weights(benchmark::State& state, kernels::Execution ex)
{
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 60);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::item_weights(ex, f.data.responses, f.assignment));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void fit_items(benchmark::State& state, kernels::Execution ex, bool isotonic)
{
  const auto f = make_fixture(1000, static_cast<std::size_t>(state.range(0)));
  const auto weights = kernels::item_weights(f.data.responses, f.assignment);
  kernels::ItemModel model;
  model.isotonic = isotonic;
  model.budget = SmoothnessBudget::bounded(2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::fit_items(ex, weights, model, std::nullopt));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK_CAPTURE(posterior, serial, kernels::Execution::Serial)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(posterior, openmp, kernels::Execution::Parallel)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(item_weights, serial, kernels::Execution::Serial)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(item_weights, openmp, kernels::Execution::Parallel)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(fit_items, scm_serial, kernels::Execution::Serial, false)->Arg(60);
BENCHMARK_CAPTURE(fit_items, scm_openmp, kernels::Execution::Parallel, false)->Arg(60);
BENCHMARK_CAPTURE(fit_items, mhm_serial, kernels::Execution::Serial, true)->Arg(60);
BENCHMARK_CAPTURE(fit_items, mhm_openmp, kernels::Execution::Parallel, true)->Arg(60);

BENCHMARK_MAIN();
