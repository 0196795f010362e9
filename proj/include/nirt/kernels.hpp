#ifndef NIRT_KERNELS_HPP
#define NIRT_KERNELS_HPP

// Data-parallel inner loops of the EM iteration.
//
// Each kernel exists twice: a plain loop in nirt::kernels::serial, kept as
// the reference implementation, and an OpenMP version in nirt::kernels.
// Work is split so every output element is computed by exactly one thread
// with the same operation order as the serial loop, which makes the two
// versions bitwise identical for any thread count.

#include "nirt/core.hpp"
#include "nirt/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nirt::kernels {

enum class Execution
{
  Serial,
  Parallel,
};

/// Posterior class weights and the per-examinee log marginal likelihood
/// log sum_t pi_t f(u_i | w_t).
struct Posterior
{
  std::vector<double> weights; // examinee-major, n_examinees x n_classes
  std::vector<double> log_marginal;
};

/// Fitted row of one item, or the error raised for it.
struct ItemFit
{
  std::vector<double> w; // logits
  std::vector<double> x; // probabilities
  SolverReport report;
  std::string error;
};

/// Model fitted by the per-item M-step.
struct ItemModel
{
  bool isotonic = false; // probability-space PAVA instead of the logit solver
  SmoothnessBudget budget = SmoothnessBudget::unbounded();
  SolverOptions solver;
};

namespace serial {

std::vector<ItemWeights> item_weights(const ResponseMatrix& data, const SoftAssignment& y);

Posterior posterior(const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi);

std::vector<ItemFit> fit_items(const std::vector<ItemWeights>& weights, const ItemModel& model,
                               const std::optional<LogitIcc>& warm);

} // namespace serial

std::vector<ItemWeights> item_weights(const ResponseMatrix& data, const SoftAssignment& y);

Posterior posterior(const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi);

std::vector<ItemFit> fit_items(const std::vector<ItemWeights>& weights, const ItemModel& model,
                               const std::optional<LogitIcc>& warm);

/// Selects the serial or OpenMP variant.
std::vector<ItemWeights> item_weights(Execution ex, const ResponseMatrix& data,
                                      const SoftAssignment& y);
Posterior posterior(Execution ex, const ResponseMatrix& data, const LogitIcc& logits,
                    std::span<const double> log_pi);
std::vector<ItemFit> fit_items(Execution ex, const std::vector<ItemWeights>& weights,
                               const ItemModel& model, const std::optional<LogitIcc>& warm);

/// Threads used by the OpenMP variants (1 without OpenMP).
int max_threads();
void set_threads(int n);

} // namespace nirt::kernels

#endif // NIRT_KERNELS_HPP
