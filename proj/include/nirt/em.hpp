#ifndef NIRT_EM_HPP
#define NIRT_EM_HPP

#include "nirt/core.hpp"
#include "nirt/kernels.hpp"
#include "nirt/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nirt {

enum class ModelKind
{
  Mhm, // monotone homogeneity, isotonic M-step in probability space
  Scm, // smoothness-constrained, convex M-step in logit space
};

struct EmConfig
{
  std::size_t n_classes = 10;
  ModelKind model = ModelKind::Scm;
  SmoothnessBudget budget = SmoothnessBudget::bounded(2.0); // ignored for Mhm
  int max_iterations = 200;
  double subproblem_tol = 1e-6;
  int subproblem_max_iterations = 500;
  double pi_floor = 1e-6;
  kernels::Execution execution = kernels::Execution::Parallel;

  /// Throws Error naming the offending field.
  void validate() const;
};

enum class Termination
{
  StableAssignment,
  MaxIterations,
};

std::string to_string(Termination t);

struct MStepResult
{
  ProbIcc icc;
  LogitIcc logits; // SCM: fitted logits; MHM: logits of the clipped probabilities
  ClassSizes sizes;
  std::vector<SolverReport> reports;
};

struct FitResult
{
  ProbIcc icc;
  std::optional<LogitIcc> logits;
  SoftAssignment assignment;
  std::vector<std::size_t> hard_classes; // 0-based
  ClassSizes class_sizes;
  std::vector<double> loglik_trace;
  int iterations = 0;
  Termination terminated_by = Termination::MaxIterations;
  std::vector<SolverReport> solver_reports; // final M-step, one per item
  int unconverged_subproblems = 0;          // over all iterations
};

/// Binary start: examinees sorted by raw score (stable), cut into
/// n_classes contiguous groups; the first |I| mod |T| groups get one extra.
SoftAssignment initialize_assignment(const ResponseMatrix& data, std::size_t n_classes);

/// Column means of the assignment, floored at pi_floor and renormalized.
ClassSizes update_class_sizes(const SoftAssignment& assignment, double pi_floor = 1e-6);

/// Posterior class membership under the given logits and class sizes.
SoftAssignment e_step(const ResponseMatrix& data, const LogitIcc& logits, const ClassSizes& sizes,
                      kernels::Execution ex = kernels::Execution::Parallel);

/// Observed-data log-likelihood sum_i log sum_t pi_t f(u_i | w_t).
double observed_loglik(const ResponseMatrix& data, const LogitIcc& logits,
                       const ClassSizes& sizes,
                       kernels::Execution ex = kernels::Execution::Parallel);

/// Class sizes plus one independent M-step problem per item. Item errors
/// are rethrown as "item <j>: <message>" for the lowest failing j.
MStepResult m_step(const ResponseMatrix& data, const SoftAssignment& assignment,
                   const EmConfig& config, const std::optional<LogitIcc>& warm = std::nullopt);

/// EM from the raw-score split: M-step, E-step, repeat until the hard
/// classes stop changing or max_iterations is reached.
FitResult fit(const ResponseMatrix& data, const EmConfig& config);

/// Same iteration from a caller-supplied starting assignment.
FitResult fit(const ResponseMatrix& data, const EmConfig& config, SoftAssignment initial);

} // namespace nirt

#endif // NIRT_EM_HPP
