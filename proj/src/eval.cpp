#include "nirt/eval.hpp"

#include <charconv>
#include <chrono>

namespace nirt::eval {

double rmse_classes(std::span<const std::size_t> truth, std::span<const std::size_t> estimate)
{
  if (truth.size() != estimate.size()) {
    throw Error("rmse_classes: class vectors differ in length");
  }
  if (truth.empty()) {
    throw Error("rmse_classes: no examinees");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = static_cast<double>(truth[i]) - static_cast<double>(estimate[i]);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double rmse_icc(const ProbIcc& truth, const ProbIcc& estimate)
{
  if (truth.n_items() != estimate.n_items() || truth.n_classes() != estimate.n_classes()) {
    throw Error("rmse_icc: ICC dimensions differ");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.data().size(); ++k) {
    const double d = truth.data()[k] - estimate.data()[k];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(truth.data().size()));
}

double sup_distance(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size()) {
    throw Error("sup_distance: rows differ in length");
  }
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    worst = std::max(worst, std::abs(a[t] - b[t]));
  }
  return worst;
}

std::string ModelSpec::name() const
{
  if (kind == ModelKind::Mhm) {
    return "MHM";
  }
  if (budget.is_unbounded()) {
    return "SCM(inf)";
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, budget.gamma());
  return "SCM(" + std::string(buf, res.ptr) + ")";
}

ModelSpec ModelSpec::parse(const std::string& text)
{
  std::string s;
  for (char c : text) {
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "mhm") {
    return mhm();
  }
  std::string gamma;
  if (s.rfind("scm(", 0) == 0 && s.back() == ')') {
    gamma = s.substr(4, s.size() - 5);
  } else if (s.rfind("scm:", 0) == 0) {
    gamma = s.substr(4);
  } else {
    throw Error("unknown model '" + text + "' (expected mhm, scm:<gamma> or SCM(<gamma>))");
  }
  if (gamma == "inf") {
    return scm_unbounded();
  }
  double value = 0.0;
  const auto res = std::from_chars(gamma.data(), gamma.data() + gamma.size(), value);
  if (res.ec != std::errc() || res.ptr != gamma.data() + gamma.size() || !(value >= 0.0)) {
    throw Error("invalid smoothness budget in model '" + text + "'");
  }
  return scm(value);
}

void ExperimentSpec::validate() const
{
  if (conditions.empty()) {
    throw Error("conditions: at least one condition is required");
  }
  if (models.empty()) {
    throw Error("models: at least one model is required");
  }
  if (n_classes != ClassLadder::standard_ten().n_classes()) {
    throw Error("classes: simulated experiments use the 10-class ladder");
  }
  if (replications < 1) {
    throw Error("reps: must be at least 1");
  }
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    const auto& cond = conditions[c];
    const std::string where = "conditions[" + std::to_string(c) + "]";
    if (cond.n_examinees < n_classes) {
      throw Error(where + ".examinees: must be at least the number of classes");
    }
    if (cond.n_items < 1) {
      throw Error(where + ".items: must be at least 1");
    }
    if (!(cond.rho >= 0.0 && cond.rho <= 1.0)) {
      throw Error(where + ".rho: must lie in [0, 1]");
    }
    for (std::size_t j : plot_items) {
      if (j >= cond.n_items) {
        throw Error("plot_items: item " + std::to_string(j + 1) + " exceeds " + where + ".items");
      }
    }
  }
}

namespace {

struct Task
{
  std::size_t condition;
  std::size_t replication;
};

EmConfig em_config(const ExperimentSpec& spec, const ModelSpec& model)
{
  EmConfig config;
  config.n_classes = spec.n_classes;
  config.model = model.kind;
  config.budget = model.budget;
  config.max_iterations = spec.max_iterations;
  config.subproblem_tol = spec.tol;
  // Replications already run in parallel.
  config.execution = kernels::Execution::Serial;
  return config;
}

double mean(const std::vector<double>& v)
{
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v)
{
  if (v.size() < 2) {
    return 0.0;
  }
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) {
    s += (x - m) * (x - m);
  }
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

std::vector<Summary> summarize(const ExperimentSpec& spec,
                               const std::vector<Replication>& replications)
{
  std::vector<Summary> out;
  for (std::size_t c = 0; c < spec.conditions.size(); ++c) {
    for (const auto& model : spec.models) {
      Summary s;
      s.condition = spec.conditions[c];
      s.model = model.name();
      std::vector<double> icc, cls, iters, times;
      for (const auto& r : replications) {
        if (r.condition != c || r.model != s.model) {
          continue;
        }
        if (r.failed) {
          ++s.n_failed;
          continue;
        }
        ++s.n_ok;
        s.n_max_iterations += r.terminated_by == Termination::MaxIterations ? 1 : 0;
        icc.push_back(r.rmse_icc);
        cls.push_back(r.rmse_class);
        iters.push_back(r.em_iterations);
        times.push_back(r.wall_time_seconds);
      }
      s.mean_rmse_icc = mean(icc);
      s.sd_rmse_icc = sample_sd(icc);
      s.mean_rmse_class = mean(cls);
      s.sd_rmse_class = sample_sd(cls);
      s.mean_iterations = mean(iters);
      s.mean_wall_time = mean(times);
      out.push_back(s);
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
  spec.validate();
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < spec.conditions.size(); ++c) {
    for (std::size_t r = 0; r < spec.replications; ++r) {
      tasks.push_back({c, r});
    }
  }
  const std::size_t M = spec.models.size();
  std::vector<Replication> rows(tasks.size() * M);
  std::vector<std::optional<PlotSeries>> plot_slots(spec.conditions.size() * spec.plot_items.size());

  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const Task task = tasks[static_cast<std::size_t>(k)];
    const Condition& cond = spec.conditions[task.condition];
    sim::SimConfig sc;
    sc.n_examinees = cond.n_examinees;
    sc.n_items = cond.n_items;
    sc.rho = cond.rho;
    sc.seed = spec.base_seed + task.replication;
    const sim::SimDataset data = sim::generate(sc);

    std::vector<ProbIcc> fitted;
    for (std::size_t m = 0; m < M; ++m) {
      Replication& row = rows[static_cast<std::size_t>(k) * M + m];
      row.condition = task.condition;
      row.replication = task.replication;
      row.seed = sc.seed;
      row.model = spec.models[m].name();
      row.data_digest = data.responses.digest();
      const auto start = std::chrono::steady_clock::now();
      try {
        const FitResult result = fit(data.responses, em_config(spec, spec.models[m]));
        row.rmse_icc = rmse_icc(data.true_icc, result.icc);
        row.rmse_class = rmse_classes(data.true_classes, result.hard_classes);
        row.em_iterations = result.iterations;
        row.terminated_by = result.terminated_by;
        fitted.push_back(result.icc);
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
      }
      row.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    if (task.replication == 0 && fitted.size() == M) {
      for (std::size_t p = 0; p < spec.plot_items.size(); ++p) {
        const std::size_t j = spec.plot_items[p];
        PlotSeries series;
        series.condition = task.condition;
        series.item = j;
        const auto truth = data.true_icc.row(j);
        series.truth.assign(truth.begin(), truth.end());
        for (std::size_t m = 0; m < M; ++m) {
          series.models.push_back(spec.models[m].name());
          const auto row = fitted[m].row(j);
          series.fitted.emplace_back(row.begin(), row.end());
        }
        plot_slots[task.condition * spec.plot_items.size() + p] = std::move(series);
      }
    }
  }

  if (spec.check_paired) {
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      for (std::size_t m = 1; m < M; ++m) {
        if (rows[k * M + m].data_digest != rows[k * M].data_digest) {
          throw Error("paired design violated: models saw different responses");
        }
      }
    }
  }

  ExperimentResult out;
  out.replications = std::move(rows);
  out.summaries = summarize(spec, out.replications);
  for (auto& p : plot_slots) {
    if (p) {
      out.plots.push_back(std::move(*p));
    }
  }
  return out;
}

} // namespace nirt::eval
