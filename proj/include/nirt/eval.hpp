#ifndef NIRT_EVAL_HPP
#define NIRT_EVAL_HPP

#include "nirt/em.hpp"
#include "nirt/sim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nirt::eval {

/// sqrt(sum_i (truth_i - estimate_i)^2 / |I|), labels taken as integers.
double rmse_classes(std::span<const std::size_t> truth, std::span<const std::size_t> estimate);

/// sqrt(sum_{j,t} (truth_jt - estimate_jt)^2 / (|J| |T|)).
double rmse_icc(const ProbIcc& truth, const ProbIcc& estimate);

/// Largest per-class absolute difference between two ICC rows.
double sup_distance(std::span<const double> a, std::span<const double> b);

struct ModelSpec
{
  ModelKind kind = ModelKind::Mhm;
  SmoothnessBudget budget = SmoothnessBudget::unbounded();

  static ModelSpec mhm() { return {}; }
  static ModelSpec scm(double gamma) { return {ModelKind::Scm, SmoothnessBudget::bounded(gamma)}; }
  static ModelSpec scm_unbounded() { return {ModelKind::Scm, SmoothnessBudget::unbounded()}; }

  /// "MHM", "SCM(2)", "SCM(inf)".
  std::string name() const;
  /// Inverse of name(); also accepts "mhm", "scm:2", "scm:inf".
  static ModelSpec parse(const std::string& text);
};

struct Condition
{
  std::size_t n_examinees = 1000;
  std::size_t n_items = 30;
  double rho = 0.0;
};

struct ExperimentSpec
{
  std::vector<Condition> conditions;
  std::vector<ModelSpec> models;
  std::size_t replications = 10;
  std::uint64_t base_seed = 1;
  std::size_t n_classes = 10;
  int max_iterations = 200;
  double tol = 1e-6;
  /// 0-based items whose fitted curves are kept from replication 0.
  std::vector<std::size_t> plot_items;
  /// Digest check that every model saw the same responses.
  bool check_paired = true;

  void validate() const;
};

/// One model fitted on one replication of one condition.
struct Replication
{
  std::size_t condition = 0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::uint64_t data_digest = 0;
  std::string model;
  double rmse_class = 0.0;
  double rmse_icc = 0.0;
  double wall_time_seconds = 0.0;
  int em_iterations = 0;
  Termination terminated_by = Termination::MaxIterations;
  bool failed = false;
  std::string error;
};

struct Summary
{
  Condition condition;
  std::string model;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::size_t n_max_iterations = 0;
  double mean_rmse_icc = 0.0;
  double sd_rmse_icc = 0.0;
  double mean_rmse_class = 0.0;
  double sd_rmse_class = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_time = 0.0;
};

struct PlotSeries
{
  std::size_t condition = 0;
  std::size_t item = 0; // 0-based
  std::vector<double> truth;
  std::vector<std::string> models;
  std::vector<std::vector<double>> fitted; // one row per model
};

struct ExperimentResult
{
  std::vector<Replication> replications; // condition, replication, model order
  std::vector<Summary> summaries;        // condition, model order
  std::vector<PlotSeries> plots;
};

/// Fits every model on the same simulated dataset per (condition,
/// replication) with seed base_seed + replication, then averages in fixed
/// replication order. Replications run in parallel; results do not depend
/// on the thread count except for wall times.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Means and standard deviations of the successful replications.
std::vector<Summary> summarize(const ExperimentSpec& spec,
                               const std::vector<Replication>& replications);

} // namespace nirt::eval

#endif // NIRT_EVAL_HPP
