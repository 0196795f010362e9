#include "nirt/solver.hpp"

#include <Eigen/Dense>

#include <numeric>

namespace nirt {

ItemWeights::ItemWeights(std::vector<double> correct, std::vector<double> incorrect)
    : correct_(std::move(correct)), incorrect_(std::move(incorrect))
{
  if (correct_.size() != incorrect_.size() || correct_.empty()) {
    throw Error("item weights need one correct and one incorrect count per class");
  }
  for (std::size_t t = 0; t < correct_.size(); ++t) {
    if (!(correct_[t] >= 0.0) || !(incorrect_[t] >= 0.0)) {
      throw Error("item weights must be nonnegative");
    }
  }
}

double ItemWeights::total_mass() const
{
  return std::accumulate(correct_.begin(), correct_.end(), 0.0) +
         std::accumulate(incorrect_.begin(), incorrect_.end(), 0.0);
}

//----------------------------------------------------------------------------
// Isotonic regression
//----------------------------------------------------------------------------

std::vector<double> pava_bernoulli(const ItemWeights& weights)
{
  const std::size_t n = weights.n_classes();

  struct Block
  {
    double correct;
    double mass;
    std::size_t last; // index into `defined`
  };
  std::vector<std::size_t> defined;
  std::vector<Block> blocks;
  for (std::size_t t = 0; t < n; ++t) {
    const double mass = weights.mass(t);
    if (mass <= 0.0) {
      continue;
    }
    defined.push_back(t);
    blocks.push_back({weights.correct()[t], mass, defined.size() - 1});
    // Pool while the last two block means violate the order.
    while (blocks.size() > 1) {
      const Block& hi = blocks[blocks.size() - 1];
      const Block& lo = blocks[blocks.size() - 2];
      if (lo.correct * hi.mass <= hi.correct * lo.mass) {
        break;
      }
      Block merged{lo.correct + hi.correct, lo.mass + hi.mass, hi.last};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  if (defined.empty()) {
    throw Error("degenerate item");
  }

  std::vector<double> x(n, 0.0);
  std::vector<bool> set(n, false);
  std::size_t k = 0;
  for (const Block& b : blocks) {
    const double mean = b.correct / b.mass;
    for (; k <= b.last; ++k) {
      x[defined[k]] = mean;
      set[defined[k]] = true;
    }
  }
  // Zero-mass classes: nearest defined class on the left, else on the right.
  const std::size_t first = defined.front();
  for (std::size_t t = 0; t < first; ++t) {
    x[t] = x[first];
  }
  for (std::size_t t = first + 1; t < n; ++t) {
    if (!set[t]) {
      x[t] = x[t - 1];
    }
  }
  return x;
}

//----------------------------------------------------------------------------
// Smoothness budget
//----------------------------------------------------------------------------

double smoothness_norm(std::span<const double> w)
{
  double sum = 0.0;
  for (std::size_t t = 0; t + 2 < w.size(); ++t) {
    sum += std::abs(w[t + 2] - 2.0 * w[t + 1] + w[t]);
  }
  return sum;
}

SlackDecomposition transform_to_slack(std::span<const double> w)
{
  if (w.size() < 3) {
    throw Error("no second differences");
  }
  SlackDecomposition out;
  out.s.resize(w.size() - 2);
  out.v.resize(w.size() - 2);
  for (std::size_t t = 0; t + 2 < w.size(); ++t) {
    const double d = w[t + 2] - 2.0 * w[t + 1] + w[t];
    out.s[t] = std::max(d, 0.0);
    out.v[t] = std::max(-d, 0.0);
  }
  return out;
}

double subproblem_objective(const ItemWeights& weights, std::span<const double> w)
{
  double sum = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    sum += weights.correct()[t] * softplus(-w[t]) + weights.incorrect()[t] * softplus(w[t]);
  }
  return sum;
}

double feasibility_violation(std::span<const double> w, const SmoothnessBudget& budget)
{
  double worst = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    worst = std::max(worst, std::abs(w[t]) - kLogitBound);
    if (t + 1 < w.size()) {
      worst = std::max(worst, w[t] - w[t + 1]);
    }
  }
  if (!budget.is_unbounded()) {
    worst = std::max(worst, smoothness_norm(w) - budget.gamma());
  }
  return worst;
}

//----------------------------------------------------------------------------
// Interior-point solver
//----------------------------------------------------------------------------

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Form
{
  Monotone, // z = w
  Epigraph, // z = (w, e)
  Affine,   // z = (c, b), w_t = c + b (t - center)
};

// min f(map z)  s.t.  g z <= h
struct Program
{
  Form form;
  MatrixXd map;
  MatrixXd g;
  VectorXd h;
};

Program build_program(std::size_t n_classes, const SmoothnessBudget& budget)
{
  const auto T = static_cast<Eigen::Index>(n_classes);
  Program p;
  if (budget.is_unbounded() || T < 3) {
    p.form = Form::Monotone;
  } else if (budget.gamma() == 0.0) {
    p.form = Form::Affine;
  } else {
    p.form = Form::Epigraph;
  }

  Eigen::Index n = 0;
  Eigen::Index rows = 2 * T; // box
  switch (p.form) {
  case Form::Monotone:
    n = T;
    rows += T - 1;
    break;
  case Form::Epigraph:
    n = 2 * T - 2;
    rows += (T - 1) + 2 * (T - 2) + 1;
    break;
  case Form::Affine:
    n = 2;
    rows += 1;
    break;
  }

  p.map = MatrixXd::Zero(T, n);
  if (p.form == Form::Affine) {
    const double center = 0.5 * static_cast<double>(T - 1);
    for (Eigen::Index t = 0; t < T; ++t) {
      p.map(t, 0) = 1.0;
      p.map(t, 1) = static_cast<double>(t) - center;
    }
  } else {
    p.map.leftCols(T).setIdentity();
  }

  p.g = MatrixXd::Zero(rows, n);
  p.h = VectorXd::Zero(rows);
  Eigen::Index r = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    p.g.row(r) = p.map.row(t);
    p.h(r++) = kLogitBound;
    p.g.row(r) = -p.map.row(t);
    p.h(r++) = kLogitBound;
  }
  if (p.form == Form::Affine) {
    p.g(r++, 1) = -1.0;
    return p;
  }
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    p.g(r, t) = 1.0;
    p.g(r++, t + 1) = -1.0;
  }
  if (p.form == Form::Epigraph) {
    for (Eigen::Index t = 0; t + 2 < T; ++t) {
      const Eigen::Index e = T + t;
      // d_t - e_t <= 0 and -d_t - e_t <= 0
      p.g(r, t) = 1.0;
      p.g(r, t + 1) = -2.0;
      p.g(r, t + 2) = 1.0;
      p.g(r++, e) = -1.0;
      p.g(r, t) = -1.0;
      p.g(r, t + 1) = 2.0;
      p.g(r, t + 2) = -1.0;
      p.g(r++, e) = -1.0;
    }
    for (Eigen::Index t = 0; t + 2 < T; ++t) {
      p.g(r, T + t) = 1.0;
    }
    p.h(r++) = budget.gamma();
  }
  return p;
}

bool row_is_feasible(std::span<const double> w, const SmoothnessBudget& budget)
{
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (!std::isfinite(w[t]) || std::abs(w[t]) > kLogitBound) {
      return false;
    }
    if (t + 1 < w.size() && w[t] > w[t + 1]) {
      return false;
    }
  }
  return budget.is_unbounded() ||
         smoothness_norm(w) <= budget.gamma() * (1.0 + 1e-9) + 1e-12;
}

// Strictly feasible z built from a row w that is feasible (not necessarily
// strictly), by blending it with an increasing line.
VectorXd interior_point_from_row(const Program& p, std::span<const double> w_row,
                                 double line_center, const SmoothnessBudget& budget)
{
  constexpr double blend = 0.05;
  constexpr double slope = 0.1;
  const auto T = static_cast<Eigen::Index>(w_row.size());
  const double center = 0.5 * static_cast<double>(T - 1);

  VectorXd w(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double line = line_center + slope * (static_cast<double>(t) - center);
    w(t) = (1.0 - blend) * w_row[static_cast<std::size_t>(t)] + blend * line;
  }

  VectorXd z(p.g.cols());
  switch (p.form) {
  case Form::Monotone:
    z = w;
    break;
  case Form::Affine:
    z(0) = w.mean();
    z(1) = T > 1 ? (w(T - 1) - w(0)) / static_cast<double>(T - 1) : slope;
    break;
  case Form::Epigraph: {
    z.head(T) = w;
    double norm = 0.0;
    for (Eigen::Index t = 0; t + 2 < T; ++t) {
      norm += std::abs(w(t + 2) - 2.0 * w(t + 1) + w(t));
    }
    const double spare = (budget.gamma() - norm) / static_cast<double>(2 * (T - 2));
    for (Eigen::Index t = 0; t + 2 < T; ++t) {
      z(T + t) = std::abs(w(t + 2) - 2.0 * w(t + 1) + w(t)) + spare;
    }
    break;
  }
  }
  return z;
}

struct Objective
{
  std::vector<double> correct; // normalized by total mass
  std::vector<double> mass;    // normalized by total mass

  double value(const VectorXd& w) const
  {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < w.size(); ++t) {
      const auto k = static_cast<std::size_t>(t);
      sum += correct[k] * softplus(-w(t)) + (mass[k] - correct[k]) * softplus(w(t));
    }
    return sum;
  }
  VectorXd gradient(const VectorXd& w) const
  {
    VectorXd g(w.size());
    for (Eigen::Index t = 0; t < w.size(); ++t) {
      const auto k = static_cast<std::size_t>(t);
      g(t) = mass[k] * logistic(w(t)) - correct[k];
    }
    return g;
  }
  VectorXd curvature(const VectorXd& w) const
  {
    VectorXd c(w.size());
    for (Eigen::Index t = 0; t < w.size(); ++t) {
      const double x = logistic(w(t));
      c(t) = mass[static_cast<std::size_t>(t)] * x * (1.0 - x);
    }
    return c;
  }
};

struct IpmResult
{
  VectorXd z;
  double dual_residual;
  double gap;
  int iterations;
};

IpmResult primal_dual_ipm(const Program& p, const Objective& f, VectorXd z, int max_iterations,
                          double dual_target, double gap_target)
{
  constexpr double mu = 10.0;
  constexpr double backtrack = 0.5;
  constexpr double sufficient = 0.01;

  const Eigen::Index m = p.g.rows();
  const double md = static_cast<double>(m);

  VectorXd slack = p.h - p.g * z;
  VectorXd lambda = (1.0 / md) * slack.cwiseInverse();

  auto residual_norm = [&](const VectorXd& zz, const VectorXd& ll, double t) {
    const VectorXd w = p.map * zz;
    const VectorXd rd = p.map.transpose() * f.gradient(w) + p.g.transpose() * ll;
    const VectorXd ss = p.h - p.g * zz;
    const VectorXd rc = ll.cwiseProduct(ss).array() - 1.0 / t;
    return std::sqrt(rd.squaredNorm() + rc.squaredNorm());
  };

  IpmResult out{z, 0.0, 0.0, 0};
  for (int iter = 0; iter <= max_iterations; ++iter) {
    slack = p.h - p.g * z;
    const VectorXd w = p.map * z;
    const VectorXd grad = p.map.transpose() * f.gradient(w);
    const VectorXd dual = grad + p.g.transpose() * lambda;
    const double gap = slack.dot(lambda);

    out.z = z;
    out.dual_residual = dual.lpNorm<Eigen::Infinity>();
    out.gap = gap;
    out.iterations = iter;
    if ((out.dual_residual <= dual_target && gap <= gap_target) || iter == max_iterations) {
      break;
    }

    const double t = mu * md / gap;
    const VectorXd ratio = lambda.cwiseQuotient(slack);
    MatrixXd hess = p.map.transpose() * f.curvature(w).asDiagonal() * p.map;
    hess.noalias() += p.g.transpose() * ratio.asDiagonal() * p.g;
    const VectorXd rhs = -(grad + (1.0 / t) * (p.g.transpose() * slack.cwiseInverse()));

    Eigen::LDLT<MatrixXd> ldlt(hess);
    VectorXd dz = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !dz.allFinite()) {
      hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
      dz = hess.ldlt().solve(rhs);
    }
    const VectorXd gdz = p.g * dz;
    const VectorXd dlambda =
        -lambda + (1.0 / t) * slack.cwiseInverse() + ratio.cwiseProduct(gdz);

    double step = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dlambda(i) < 0.0) {
        step = std::min(step, -lambda(i) / dlambda(i));
      }
    }
    step *= 0.99;
    // Stay strictly inside the constraints.
    while (step > 1e-16 && ((p.h - p.g * (z + step * dz)).array() <= 0.0).any()) {
      step *= backtrack;
    }
    const double r0 = residual_norm(z, lambda, t);
    while (step > 1e-16 &&
           residual_norm(z + step * dz, lambda + step * dlambda, t) > (1.0 - sufficient * step) * r0) {
      step *= backtrack;
    }
    if (step <= 1e-16) {
      break;
    }
    z += step * dz;
    lambda += step * dlambda;
  }
  return out;
}

// Monotone cleanup of rounding-level order violations.
void enforce_order(std::vector<double>& w)
{
  for (std::size_t t = 1; t < w.size(); ++t) {
    w[t] = std::max(w[t], w[t - 1]);
  }
}

} // namespace

SubproblemSolution solve_item_subproblem(const ItemWeights& weights,
                                         const SmoothnessBudget& budget,
                                         std::optional<std::span<const double>> warm_start,
                                         const SolverOptions& options)
{
  const std::size_t T = weights.n_classes();
  const double total = weights.total_mass();
  if (!(total > 0.0)) {
    throw Error("degenerate item");
  }
  if (warm_start && warm_start->size() != T) {
    throw Error("warm start length does not match the number of classes");
  }

  Objective f;
  f.correct.resize(T);
  f.mass.resize(T);
  double correct_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    f.correct[t] = weights.correct()[t] / total;
    f.mass[t] = weights.mass(t) / total;
    correct_total += weights.correct()[t];
  }

  const Program program = build_program(T, budget);
  const double overall = std::clamp(correct_total / total, 1e-4, 1.0 - 1e-4);
  const double line_center = std::clamp(logit(overall), -10.0, 10.0);

  std::optional<VectorXd> z0;
  const bool warm_ok = warm_start && row_is_feasible(*warm_start, budget);
  if (warm_ok) {
    VectorXd z = interior_point_from_row(program, *warm_start, line_center, budget);
    if (((program.h - program.g * z).array() > 0.0).all()) {
      z0 = std::move(z);
    }
  }
  if (!z0) {
    const std::vector<double> flat(T, line_center);
    z0 = interior_point_from_row(program, flat, line_center, budget);
  }

  const double gap_target = std::min(options.tol, 1e-12);
  const double dual_target = 1e-3 * options.tol;
  const IpmResult ipm =
      primal_dual_ipm(program, f, *z0, options.max_iterations, dual_target, gap_target);

  SubproblemSolution out;
  const VectorXd w = program.map * ipm.z;
  out.w.assign(w.data(), w.data() + w.size());
  enforce_order(out.w);

  out.report.objective = subproblem_objective(weights, out.w);
  out.report.kkt_residual = std::max(ipm.dual_residual, ipm.gap);
  out.report.feasibility_violation = std::max(0.0, feasibility_violation(out.w, budget));
  out.report.iterations = ipm.iterations;
  out.report.converged = out.report.kkt_residual <= options.tol &&
                         out.report.feasibility_violation <= options.tol;

  if (warm_ok) {
    const double warm_objective = subproblem_objective(weights, *warm_start);
    if (warm_objective < out.report.objective) {
      out.w.assign(warm_start->begin(), warm_start->end());
      out.report.objective = warm_objective;
      out.report.feasibility_violation =
          std::max(0.0, feasibility_violation(out.w, budget));
    }
  }
  return out;
}

} // namespace nirt
