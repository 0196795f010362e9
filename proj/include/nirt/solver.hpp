#ifndef NIRT_SOLVER_HPP
#define NIRT_SOLVER_HPP

#include "nirt/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace nirt {

/// Box bound on logits; keeps the subproblem bounded when a class has
/// one-sided data. logistic(15) = 1 - 3.06e-7.
inline constexpr double kLogitBound = 15.0;

/// Class-wise sufficient statistics of one item: soft counts of correct
/// and incorrect answers per class.
class ItemWeights
{
public:
  ItemWeights(std::vector<double> correct, std::vector<double> incorrect);

  std::size_t n_classes() const { return correct_.size(); }
  const std::vector<double>& correct() const { return correct_; }
  const std::vector<double>& incorrect() const { return incorrect_; }
  double mass(std::size_t t) const { return correct_[t] + incorrect_[t]; }
  double total_mass() const;

private:
  std::vector<double> correct_;
  std::vector<double> incorrect_;
};

/// Nonnegative split of the second differences of a logit row, s - v = d.
struct SlackDecomposition
{
  std::vector<double> s;
  std::vector<double> v;
};

struct SolverReport
{
  double objective = 0.0;
  double kkt_residual = 0.0;
  double feasibility_violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions
{
  double tol = 1e-6;
  int max_iterations = 500;
};

struct SubproblemSolution
{
  std::vector<double> w;
  SolverReport report;
};

/// Weighted isotonic Bernoulli regression: the nondecreasing x maximizing
/// sum_t correct[t] log x_t + incorrect[t] log(1 - x_t).
///
/// Pool-adjacent-violators on the class proportions with class masses as
/// weights. Classes with zero mass copy the nearest class with data on the
/// left, or on the right when no such class exists.
std::vector<double> pava_bernoulli(const ItemWeights& weights);

/// sum_t |w[t+2] - 2 w[t+1] + w[t]|; zero for rows shorter than three.
double smoothness_norm(std::span<const double> w);

/// s = positive part, v = negative part of each second difference.
SlackDecomposition transform_to_slack(std::span<const double> w);

/// sum_t correct[t] softplus(-w_t) + incorrect[t] softplus(w_t), the
/// negative log-likelihood of one item in logit space.
double subproblem_objective(const ItemWeights& weights, std::span<const double> w);

/// Largest violation of monotonicity, the smoothness budget and the logit
/// box by w; zero when feasible.
double feasibility_violation(std::span<const double> w, const SmoothnessBudget& budget);

/// Minimizes subproblem_objective subject to w_t <= w_{t+1}, the
/// smoothness budget and |w_t| <= kLogitBound.
///
/// Primal-dual interior-point method on the epigraph form
///   w_t <= w_{t+1},  -e_t <= d_t(w) <= e_t,  sum_t e_t <= gamma,
/// with the objective divided by the total class mass. gamma = 0 is solved
/// in the two-parameter family w_t = c + b t, so the returned row has
/// exactly equal spacing. A feasible warm start is used to seed the
/// interior point, and is returned unchanged when the solver output does
/// not improve on it.
///
/// Throws Error("degenerate item") when every class mass is zero.
SubproblemSolution solve_item_subproblem(const ItemWeights& weights,
                                         const SmoothnessBudget& budget,
                                         std::optional<std::span<const double>> warm_start,
                                         const SolverOptions& options = {});

} // namespace nirt

#endif // NIRT_SOLVER_HPP
