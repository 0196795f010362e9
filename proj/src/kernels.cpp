#include "nirt/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace nirt::kernels {

namespace {

ItemWeights weights_for_item(const ResponseMatrix& data, const SoftAssignment& y, std::size_t j)
{
  const std::size_t T = y.n_classes();
  std::vector<double> correct(T, 0.0), incorrect(T, 0.0);
  for (std::size_t i = 0; i < data.n_examinees(); ++i) {
    const auto yi = y.row(i);
    auto& target = data(i, j) != 0 ? correct : incorrect;
    for (std::size_t t = 0; t < T; ++t) {
      target[t] += yi[t];
    }
  }
  return ItemWeights(std::move(correct), std::move(incorrect));
}

// Cost tables: -log f contribution of item j in class t for u = 1 and u = 0.
struct CostTables
{
  std::vector<double> correct;
  std::vector<double> incorrect;
};

CostTables cost_tables(const LogitIcc& logits)
{
  CostTables c;
  c.correct.resize(logits.data().size());
  c.incorrect.resize(logits.data().size());
  for (std::size_t k = 0; k < logits.data().size(); ++k) {
    c.correct[k] = softplus(-logits.data()[k]);
    c.incorrect[k] = softplus(logits.data()[k]);
  }
  return c;
}

void posterior_row(const ResponseMatrix& data, const CostTables& cost,
                   std::span<const double> log_pi, std::size_t i, double* out,
                   double& log_marginal)
{
  const std::size_t T = log_pi.size();
  for (std::size_t t = 0; t < T; ++t) {
    out[t] = log_pi[t];
  }
  const auto u = data.row(i);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double* row = (u[j] != 0 ? cost.correct.data() : cost.incorrect.data()) + j * T;
    for (std::size_t t = 0; t < T; ++t) {
      out[t] -= row[t];
    }
  }
  double peak = out[0];
  for (std::size_t t = 1; t < T; ++t) {
    peak = std::max(peak, out[t]);
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    sum += std::exp(out[t] - peak);
  }
  const double lse = peak + std::log(sum);
  for (std::size_t t = 0; t < T; ++t) {
    out[t] = std::exp(out[t] - lse);
  }
  log_marginal = lse;
}

ItemFit fit_one(const ItemWeights& weights, const ItemModel& model,
                const std::optional<LogitIcc>& warm, std::size_t j)
{
  ItemFit fit;
  try {
    if (model.isotonic) {
      fit.x = pava_bernoulli(weights);
      fit.w.resize(fit.x.size());
      for (std::size_t t = 0; t < fit.x.size(); ++t) {
        fit.x[t] = std::clamp(fit.x[t], kProbEpsilon, 1.0 - kProbEpsilon);
        fit.w[t] = logit(fit.x[t]);
      }
      fit.report.objective = subproblem_objective(weights, fit.w);
      fit.report.converged = true;
    } else {
      std::optional<std::span<const double>> start;
      if (warm) {
        start = warm->row(j);
      }
      auto sol = solve_item_subproblem(weights, model.budget, start, model.solver);
      fit.w = std::move(sol.w);
      fit.report = sol.report;
      fit.x.resize(fit.w.size());
      std::transform(fit.w.begin(), fit.w.end(), fit.x.begin(), logistic);
    }
  } catch (const Error& e) {
    fit.error = e.what();
  }
  return fit;
}

void check_dimensions(const ResponseMatrix& data, const LogitIcc& logits,
                      std::span<const double> log_pi)
{
  if (logits.n_items() != data.n_items() || logits.n_classes() != log_pi.size()) {
    throw Error("posterior: dimensions of responses, logits and class sizes disagree");
  }
}

} // namespace

namespace serial {

std::vector<ItemWeights> item_weights(const ResponseMatrix& data, const SoftAssignment& y)
{
  std::vector<ItemWeights> out;
  out.reserve(data.n_items());
  for (std::size_t j = 0; j < data.n_items(); ++j) {
    out.push_back(weights_for_item(data, y, j));
  }
  return out;
}

Posterior posterior(const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi)
{
  check_dimensions(data, logits, log_pi);
  const CostTables cost = cost_tables(logits);
  const std::size_t T = log_pi.size();
  Posterior p;
  p.weights.resize(data.n_examinees() * T);
  p.log_marginal.resize(data.n_examinees());
  for (std::size_t i = 0; i < data.n_examinees(); ++i) {
    posterior_row(data, cost, log_pi, i, p.weights.data() + i * T, p.log_marginal[i]);
  }
  return p;
}

std::vector<ItemFit> fit_items(const std::vector<ItemWeights>& weights, const ItemModel& model,
                               const std::optional<LogitIcc>& warm)
{
  std::vector<ItemFit> out;
  out.reserve(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out.push_back(fit_one(weights[j], model, warm, j));
  }
  return out;
}

} // namespace serial

std::vector<ItemWeights> item_weights(const ResponseMatrix& data, const SoftAssignment& y)
{
  const auto n = static_cast<std::ptrdiff_t>(data.n_items());
  std::vector<std::optional<ItemWeights>> slots(data.n_items());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    slots[j].emplace(weights_for_item(data, y, static_cast<std::size_t>(j)));
  }
  std::vector<ItemWeights> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    out.push_back(std::move(*s));
  }
  return out;
}

Posterior posterior(const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi)
{
  check_dimensions(data, logits, log_pi);
  const CostTables cost = cost_tables(logits);
  const std::size_t T = log_pi.size();
  Posterior p;
  p.weights.resize(data.n_examinees() * T);
  p.log_marginal.resize(data.n_examinees());
  const auto n = static_cast<std::ptrdiff_t>(data.n_examinees());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    posterior_row(data, cost, log_pi, k, p.weights.data() + k * T, p.log_marginal[k]);
  }
  return p;
}

std::vector<ItemFit> fit_items(const std::vector<ItemWeights>& weights, const ItemModel& model,
                               const std::optional<LogitIcc>& warm)
{
  std::vector<ItemFit> out(weights.size());
  const auto n = static_cast<std::ptrdiff_t>(weights.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(j);
    out[k] = fit_one(weights[k], model, warm, k);
  }
  return out;
}

std::vector<ItemWeights> item_weights(Execution ex, const ResponseMatrix& data,
                                      const SoftAssignment& y)
{
  return ex == Execution::Serial ? serial::item_weights(data, y) : item_weights(data, y);
}

Posterior posterior(Execution ex, const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi)
{
  return ex == Execution::Serial ? serial::posterior(data, logits, log_pi)
                                 : posterior(data, logits, log_pi);
}

std::vector<ItemFit> fit_items(Execution ex, const std::vector<ItemWeights>& weights,
                               const ItemModel& model, const std::optional<LogitIcc>& warm)
{
  return ex == Execution::Serial ? serial::fit_items(weights, model, warm)
                                 : fit_items(weights, model, warm);
}

int max_threads()
{
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n)
{
#if defined(_OPENMP)
  if (n > 0) {
    omp_set_num_threads(n);
  }
#else
  (void)n;
#endif
}

} // namespace nirt::kernels
