#include "nirt/em.hpp"

#include <numeric>

namespace nirt {

void EmConfig::validate() const
{
  if (n_classes < 1) {
    throw Error("classes: must be at least 1");
  }
  if (max_iterations < 1) {
    throw Error("max_iterations: must be at least 1");
  }
  if (!(subproblem_tol > 0.0)) {
    throw Error("tol: must be positive");
  }
  if (subproblem_max_iterations < 1) {
    throw Error("subproblem_max_iterations: must be at least 1");
  }
  if (!(pi_floor > 0.0) || !(pi_floor < 1.0 / static_cast<double>(n_classes))) {
    throw Error("pi_floor: must lie in (0, 1/classes)");
  }
}

std::string to_string(Termination t)
{
  return t == Termination::StableAssignment ? "stable_assignment" : "max_iterations";
}

SoftAssignment initialize_assignment(const ResponseMatrix& data, std::size_t n_classes)
{
  const std::size_t n = data.n_examinees();
  if (n_classes == 0 || n < n_classes) {
    throw Error("initialization needs at least as many examinees as classes");
  }
  std::vector<std::size_t> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = data.raw_score(i);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

  std::vector<std::size_t> classes(n);
  const std::size_t base = n / n_classes;
  const std::size_t extra = n % n_classes;
  std::size_t pos = 0;
  for (std::size_t t = 0; t < n_classes; ++t) {
    const std::size_t size = base + (t < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) {
      classes[order[pos++]] = t;
    }
  }
  return SoftAssignment::from_hard(classes, n_classes);
}

ClassSizes update_class_sizes(const SoftAssignment& assignment, double pi_floor)
{
  const std::size_t T = assignment.n_classes();
  std::vector<double> pi(T, 0.0);
  for (std::size_t i = 0; i < assignment.n_examinees(); ++i) {
    const auto row = assignment.row(i);
    for (std::size_t t = 0; t < T; ++t) {
      pi[t] += row[t];
    }
  }
  double sum = 0.0;
  for (auto& v : pi) {
    v = std::max(v / static_cast<double>(assignment.n_examinees()), pi_floor);
    sum += v;
  }
  for (auto& v : pi) {
    v /= sum;
  }
  return ClassSizes(std::move(pi));
}

namespace {

std::vector<double> log_sizes(const ClassSizes& sizes)
{
  std::vector<double> out(sizes.n_classes());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = std::log(sizes[t]);
  }
  return out;
}

kernels::Posterior run_posterior(const ResponseMatrix& data, const LogitIcc& logits,
                                 const ClassSizes& sizes, kernels::Execution ex)
{
  if (sizes.n_classes() != logits.n_classes()) {
    throw Error("class sizes and logits disagree on the number of classes");
  }
  return kernels::posterior(ex, data, logits, log_sizes(sizes));
}

// Sum in examinee order so the result does not depend on the thread count.
double total(const std::vector<double>& v)
{
  return std::accumulate(v.begin(), v.end(), 0.0);
}

} // namespace

SoftAssignment e_step(const ResponseMatrix& data, const LogitIcc& logits, const ClassSizes& sizes,
                      kernels::Execution ex)
{
  auto post = run_posterior(data, logits, sizes, ex);
  return SoftAssignment(data.n_examinees(), sizes.n_classes(), std::move(post.weights));
}

double observed_loglik(const ResponseMatrix& data, const LogitIcc& logits,
                       const ClassSizes& sizes, kernels::Execution ex)
{
  return total(run_posterior(data, logits, sizes, ex).log_marginal);
}

MStepResult m_step(const ResponseMatrix& data, const SoftAssignment& assignment,
                   const EmConfig& config, const std::optional<LogitIcc>& warm)
{
  if (assignment.n_examinees() != data.n_examinees()) {
    throw Error("assignment and responses disagree on the number of examinees");
  }
  if (warm && (warm->n_items() != data.n_items() || warm->n_classes() != assignment.n_classes())) {
    throw Error("warm start has the wrong dimensions");
  }
  const std::size_t J = data.n_items();
  const std::size_t T = assignment.n_classes();

  ClassSizes sizes = update_class_sizes(assignment, config.pi_floor);

  kernels::ItemModel model;
  model.isotonic = config.model == ModelKind::Mhm;
  model.budget = config.budget;
  model.solver.tol = config.subproblem_tol;
  model.solver.max_iterations = config.subproblem_max_iterations;

  const auto weights = kernels::item_weights(config.execution, data, assignment);
  auto fits = kernels::fit_items(config.execution, weights, model, warm);

  std::vector<double> w(J * T), x(J * T);
  std::vector<SolverReport> reports(J);
  for (std::size_t j = 0; j < J; ++j) {
    if (!fits[j].error.empty()) {
      throw Error("item " + std::to_string(j + 1) + ": " + fits[j].error);
    }
    std::copy(fits[j].w.begin(), fits[j].w.end(), w.begin() + static_cast<std::ptrdiff_t>(j * T));
    std::copy(fits[j].x.begin(), fits[j].x.end(), x.begin() + static_cast<std::ptrdiff_t>(j * T));
    reports[j] = fits[j].report;
  }
  return MStepResult{ProbIcc(J, T, std::move(x)), LogitIcc(J, T, std::move(w)), std::move(sizes),
                     std::move(reports)};
}

FitResult fit(const ResponseMatrix& data, const EmConfig& config)
{
  config.validate();
  if (data.n_examinees() < config.n_classes) {
    throw Error("fit needs at least as many examinees as classes");
  }
  return fit(data, config, initialize_assignment(data, config.n_classes));
}

FitResult fit(const ResponseMatrix& data, const EmConfig& config, SoftAssignment initial)
{
  config.validate();
  if (initial.n_examinees() != data.n_examinees() || initial.n_classes() != config.n_classes) {
    throw Error("initial assignment has the wrong dimensions");
  }
  SoftAssignment assignment = std::move(initial);
  std::vector<std::size_t> previous = assignment.hard_classes();
  std::optional<LogitIcc> warm;
  std::vector<double> trace;
  int unconverged = 0;
  Termination how = Termination::MaxIterations;
  int iteration = 0;
  std::optional<MStepResult> m;

  while (iteration < config.max_iterations) {
    ++iteration;
    m = m_step(data, assignment, config, config.model == ModelKind::Scm ? warm : std::nullopt);
    for (const auto& r : m->reports) {
      unconverged += r.converged ? 0 : 1;
    }
    warm = m->logits;

    auto post = run_posterior(data, m->logits, m->sizes, config.execution);
    trace.push_back(total(post.log_marginal));
    assignment = SoftAssignment(data.n_examinees(), config.n_classes, std::move(post.weights));

    auto hard = assignment.hard_classes();
    if (hard == previous) {
      how = Termination::StableAssignment;
      break;
    }
    previous = std::move(hard);
  }

  FitResult out{m->icc,
                config.model == ModelKind::Scm ? std::optional<LogitIcc>(m->logits) : std::nullopt,
                assignment,
                assignment.hard_classes(),
                m->sizes,
                std::move(trace),
                iteration,
                how,
                m->reports,
                unconverged};
  return out;
}

} // namespace nirt
