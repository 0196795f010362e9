#include "nirt/em.hpp"
#include "nirt/kernels.hpp"
#include "nirt/sim.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace nirt;

namespace {

sim::SimDataset small_dataset(std::uint64_t seed)
{
  sim::SimConfig config;
  config.n_examinees = 400;
  config.n_items = 12;
  config.rho = 0.5;
  config.seed = seed;
  return sim::generate(config);
}

SoftAssignment random_assignment(std::size_t n, std::size_t T, oracle::Rng& rng)
{
  std::vector<double> y(n * T);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      y[i * T + t] = rng.uniform(0.0, 1.0);
      sum += y[i * T + t];
    }
    for (std::size_t t = 0; t < T; ++t) {
      y[i * T + t] /= sum;
    }
  }
  return SoftAssignment(n, T, std::move(y));
}

} // namespace

TEST_CASE("item weights are bitwise identical serially and in parallel")
{
  oracle::Rng rng(7);
  const auto data = small_dataset(3);
  const auto y = random_assignment(data.responses.n_examinees(), 10, rng);
  const auto a = kernels::serial::item_weights(data.responses, y);
  const auto b = kernels::item_weights(data.responses, y);
  REQUIRE(a.size() == b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK(a[j].correct() == b[j].correct());
    CHECK(a[j].incorrect() == b[j].incorrect());
  }
}

TEST_CASE("weights add up to the assignment mass")
{
  oracle::Rng rng(8);
  const auto data = small_dataset(4);
  const auto y = random_assignment(data.responses.n_examinees(), 10, rng);
  const auto w = kernels::item_weights(data.responses, y);
  for (const auto& item : w) {
    CHECK(item.total_mass() == doctest::Approx(400.0).epsilon(1e-12));
  }
}

TEST_CASE("posterior is bitwise identical serially and in parallel")
{
  const auto data = small_dataset(5);
  std::vector<double> w;
  for (std::size_t j = 0; j < 12; ++j) {
    for (std::size_t t = 0; t < 10; ++t) {
      w.push_back(-2.0 + 0.4 * static_cast<double>(t) + 0.1 * static_cast<double>(j));
    }
  }
  const LogitIcc logits(12, 10, w);
  std::vector<double> log_pi(10, std::log(0.1));
  const auto a = kernels::serial::posterior(data.responses, logits, log_pi);
  const auto b = kernels::posterior(data.responses, logits, log_pi);
  CHECK(a.weights == b.weights);
  CHECK(a.log_marginal == b.log_marginal);
}

TEST_CASE("item fits are bitwise identical serially and in parallel")
{
  const auto data = small_dataset(6);
  const auto y = initialize_assignment(data.responses, 10);
  const auto weights = kernels::item_weights(data.responses, y);
  for (bool isotonic : {false, true}) {
    kernels::ItemModel model;
    model.isotonic = isotonic;
    model.budget = SmoothnessBudget::bounded(2.0);
    const auto a = kernels::serial::fit_items(weights, model, std::nullopt);
    const auto b = kernels::fit_items(weights, model, std::nullopt);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j].w == b[j].w);
      CHECK(a[j].x == b[j].x);
      CHECK(a[j].error == b[j].error);
    }
  }
}

TEST_CASE("full fits agree across execution modes and thread counts")
{
  const auto data = small_dataset(9);
  EmConfig config;
  config.execution = kernels::Execution::Serial;
  const auto reference = fit(data.responses, config);
  const int saved = kernels::max_threads();
  for (int threads : {1, 2, 4}) {
    kernels::set_threads(threads);
    config.execution = kernels::Execution::Parallel;
    const auto result = fit(data.responses, config);
    CHECK(result.icc == reference.icc);
    CHECK(result.hard_classes == reference.hard_classes);
    CHECK(result.loglik_trace == reference.loglik_trace);
  }
  kernels::set_threads(saved);
}
