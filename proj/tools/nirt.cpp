// nirt: simulate response data, fit MHM/SCM models, score estimates and
// run simulation experiments.
//
// Exit codes: 0 success, 2 input error, 3 EM stopped at the iteration cap
// (results are still written and the manifest says so).

#include "nirt/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace nirt;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kNotConverged = 3;

std::string fixed(double x, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

//----------------------------------------------------------------------------

struct SimulateArgs
{
  std::string config;
  std::string out;
};

int run_simulate(const SimulateArgs& args)
{
  io::Manifest manifest;
  manifest.command = "simulate";
  manifest.started = io::utc_now();
  const auto config = io::load_sim_config(args.config);
  manifest.config_digest = io::digest_hex(io::canonical_json(config));
  manifest.seed = config.seed;

  const auto data = sim::generate(config);
  const fs::path out(args.out);
  io::ensure_directory(out);
  io::write_responses(out / "responses.csv", data.responses);
  io::write_classes(out / "true_classes.csv", data.true_classes);
  io::write_icc(out / "true_icc.csv", data.true_icc);
  io::write_items(out / "items.csv", data.items);
  io::write_thetas(out / "thetas.csv", data.thetas);
  manifest.outputs = {"responses.csv", "true_classes.csv", "true_icc.csv", "items.csv",
                      "thetas.csv"};

  std::string flagged;
  for (std::size_t j : data.flagged_items) {
    flagged += (flagged.empty() ? "" : " ") + std::to_string(j + 1);
  }
  manifest.extra = {{"non_monotone_3pn_items", flagged}};
  if (!data.flagged_items.empty()) {
    std::cerr << "warning: 3PN items not monotone on [-4, 4]: " << flagged << "\n";
  }
  manifest.finished = io::utc_now();
  io::write_manifest(out / "manifest.json", manifest);
  std::cout << "wrote " << data.responses.n_examinees() << " x " << data.responses.n_items()
            << " responses to " << out.string() << "\n";
  return kOk;
}

//----------------------------------------------------------------------------

struct FitArgs
{
  std::string data;
  std::string model;
  std::string gamma;
  bool header = false;
  std::size_t classes = 10;
  int max_iter = 200;
  double tol = 1e-6;
  int threads = 0;
  std::string out;
};

SmoothnessBudget parse_gamma(const std::string& text)
{
  if (text == "inf") {
    return SmoothnessBudget::unbounded();
  }
  const double g = io::parse_double(text, "--gamma");
  if (!(g >= 0.0)) {
    throw io::InputError("--gamma: must be >= 0 or inf");
  }
  return SmoothnessBudget::bounded(g);
}

int run_fit(const FitArgs& args)
{
  io::Manifest manifest;
  manifest.command = "fit";
  manifest.started = io::utc_now();

  EmConfig config;
  config.n_classes = args.classes;
  config.max_iterations = args.max_iter;
  config.subproblem_tol = args.tol;
  if (args.model == "mhm") {
    config.model = ModelKind::Mhm;
    if (!args.gamma.empty()) {
      throw io::InputError("--gamma: only meaningful with --model scm");
    }
  } else {
    config.model = ModelKind::Scm;
    if (args.gamma.empty()) {
      throw io::InputError("--gamma: required with --model scm (a number >= 0 or inf)");
    }
    config.budget = parse_gamma(args.gamma);
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw io::InputError(e.what());
  }

  const auto data = io::read_responses(args.data, args.header);
  if (data.n_examinees() < config.n_classes) {
    throw io::InputError(args.data + ": fewer examinees than classes");
  }
  const std::string model_name =
      config.model == ModelKind::Mhm
          ? "MHM"
          : eval::ModelSpec{ModelKind::Scm, config.budget}.name();
  const std::string canonical = model_name + ";classes=" + std::to_string(config.n_classes) +
                                ";max_iter=" + std::to_string(config.max_iterations) +
                                ";tol=" + io::format_double(config.subproblem_tol);
  manifest.config_digest = io::digest_hex(canonical);

  const auto result = fit(data, config);

  const fs::path out(args.out);
  io::ensure_directory(out);
  io::write_icc(out / "icc.csv", result.icc);
  manifest.outputs.push_back("icc.csv");
  if (result.logits) {
    io::write_logits(out / "logits.csv", *result.logits);
    manifest.outputs.push_back("logits.csv");
  }
  io::write_classes(out / "classes.csv", result.hard_classes);
  io::write_assignment(out / "assignment.csv", result.assignment);
  io::write_class_sizes(out / "class_sizes.csv", result.class_sizes);
  io::write_loglik(out / "loglik.csv", result.loglik_trace);
  io::write_solver_reports(out / "solver.csv", result.solver_reports);
  manifest.outputs.insert(manifest.outputs.end(), {"classes.csv", "assignment.csv",
                                                   "class_sizes.csv", "loglik.csv", "solver.csv"});

  const bool converged = result.terminated_by == Termination::StableAssignment;
  manifest.status = converged ? "ok" : "not_converged";
  manifest.extra = {{"model", model_name},
                    {"data", args.data},
                    {"data_digest", io::hex64(data.digest())},
                    {"iterations", std::to_string(result.iterations)},
                    {"terminated_by", to_string(result.terminated_by)},
                    {"unconverged_subproblems", std::to_string(result.unconverged_subproblems)},
                    {"final_loglik", io::format_double(result.loglik_trace.back())}};
  manifest.finished = io::utc_now();
  io::write_manifest(out / "manifest.json", manifest);

  std::cout << model_name << ": " << result.iterations << " iterations, "
            << to_string(result.terminated_by) << ", log-likelihood "
            << fixed(result.loglik_trace.back(), 4) << "\n";
  if (result.unconverged_subproblems > 0) {
    std::cerr << "warning: " << result.unconverged_subproblems
              << " item subproblems stopped before reaching the tolerance\n";
  }
  if (!converged) {
    std::cerr << "EM reached --max-iter " << config.max_iterations
              << " without a stable assignment; results written and flagged\n";
    return kNotConverged;
  }
  return kOk;
}

//----------------------------------------------------------------------------

struct EvaluateArgs
{
  std::string truth;
  std::string estimate;
  std::string out;
};

int run_evaluate(const EvaluateArgs& args)
{
  const fs::path truth(args.truth);
  const fs::path estimate(args.estimate);
  const auto true_classes = io::read_classes(truth / "true_classes.csv");
  const auto true_icc = io::read_icc(truth / "true_icc.csv");
  const auto classes = io::read_classes(estimate / "classes.csv");
  const auto icc = io::read_icc(estimate / "icc.csv");
  if (true_classes.size() != classes.size()) {
    throw io::InputError("class files disagree on the number of examinees");
  }
  if (true_icc.n_items() != icc.n_items() || true_icc.n_classes() != icc.n_classes()) {
    throw io::InputError("ICC files disagree on the number of items or classes");
  }
  const double rc = eval::rmse_classes(true_classes, classes);
  const double ri = eval::rmse_icc(true_icc, icc);

  io::Table table;
  table.header = {"metric", "value"};
  table.rows = {{"rmse_class", io::format_double(rc)}, {"rmse_icc", io::format_double(ri)}};
  const fs::path out(args.out);
  if (out.has_parent_path()) {
    io::ensure_directory(out.parent_path());
  }
  io::write_table(out, table);
  std::cout << "rmse_class " << fixed(rc, 4) << "\nrmse_icc   " << fixed(ri, 4) << "\n";
  return kOk;
}

//----------------------------------------------------------------------------

struct ExperimentArgs
{
  std::string spec;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

int run_experiment(const ExperimentArgs& args)
{
  io::Manifest manifest;
  manifest.command = "experiment";
  manifest.started = io::utc_now();
  auto spec = io::load_experiment_spec(args.spec);
  if (args.reps) {
    if (*args.reps < 1) {
      throw io::InputError("--reps: must be at least 1");
    }
    spec.replications = *args.reps;
  }
  if (args.seed) {
    spec.base_seed = *args.seed;
  }
  manifest.config_digest = io::digest_hex(io::canonical_json(spec));
  manifest.seed = spec.base_seed;

  const fs::path out(args.out);
  io::ensure_directory(out);
  const auto result = eval::run_experiment(spec);

  io::write_results(out / "results.csv", result.summaries);
  io::write_replications(out / "replications.csv", spec, result.replications);
  io::write_timings(out / "timings.csv", spec, result.replications);
  manifest.outputs = {"results.csv", "replications.csv", "timings.csv"};
  if (!result.plots.empty()) {
    io::ensure_directory(out / "plots");
    for (const auto& p : result.plots) {
      const std::string name = "plots/cond" + std::to_string(p.condition + 1) + "_item" +
                               std::to_string(p.item + 1) + ".csv";
      io::write_plot(out / name, p);
      manifest.outputs.push_back(name);
    }
  }

  std::size_t failed = 0;
  std::size_t capped = 0;
  for (const auto& s : result.summaries) {
    failed += s.n_failed;
    capped += s.n_max_iterations;
  }
  manifest.status = failed > 0 ? "some_replications_failed" : "ok";
  manifest.extra = {{"spec", args.spec},
                    {"threads", std::to_string(kernels::max_threads())},
                    {"failed_fits", std::to_string(failed)},
                    {"fits_at_iteration_cap", std::to_string(capped)}};
  manifest.finished = io::utc_now();
  io::write_manifest(out / "manifest.json", manifest);

  std::printf("%9s %5s %5s  %-9s %8s %8s %8s %8s\n", "examinees", "items", "rho", "model",
              "icc", "sd", "class", "sd");
  for (const auto& s : result.summaries) {
    std::printf("%9zu %5zu %5s  %-9s %8.4f %8.4f %8.4f %8.4f%s\n", s.condition.n_examinees,
                s.condition.n_items, fixed(s.condition.rho, 2).c_str(), s.model.c_str(),
                s.mean_rmse_icc, s.sd_rmse_icc, s.mean_rmse_class, s.sd_rmse_class,
                s.n_failed ? "  (failures)" : "");
  }
  if (failed > 0) {
    std::cerr << failed << " fits failed; see replications.csv\n";
  }
  return kOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Nonparametric item response models with smoothness constraints"};
  app.set_version_flag("--version", io::kToolVersion);
  bool explain = false;
  app.add_flag("--explain-config", explain, "Print configuration formats and defaults");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated dataset");
  simulate->add_option("--config", sim_args.config, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_args.out, "Output directory")->required();

  FitArgs fit_args;
  auto* fitc = app.add_subcommand("fit", "Fit an MHM or SCM model to response data");
  fitc->add_option("--data", fit_args.data, "Response CSV (0/1, one row per examinee)")
      ->required()
      ->check(CLI::ExistingFile);
  fitc->add_option("--model", fit_args.model, "mhm or scm")
      ->required()
      ->check(CLI::IsMember({"mhm", "scm"}));
  fitc->add_option("--gamma", fit_args.gamma, "Smoothness budget for scm, a number or inf");
  fitc->add_flag("--header", fit_args.header, "The response file starts with an item label row");
  fitc->add_option("--classes", fit_args.classes, "Number of latent classes")
      ->capture_default_str();
  fitc->add_option("--max-iter", fit_args.max_iter, "EM iteration cap")->capture_default_str();
  fitc->add_option("--tol", fit_args.tol, "Subproblem tolerance")->capture_default_str();
  fitc->add_option("--threads", fit_args.threads, "OpenMP threads (0 keeps the default)");
  fitc->add_option("--out", fit_args.out, "Output directory")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score an estimate against simulated truth");
  evaluate->add_option("--truth", eval_args.truth, "Directory written by simulate")->required();
  evaluate->add_option("--estimate", eval_args.estimate, "Directory written by fit")->required();
  evaluate->add_option("--out", eval_args.out, "Metrics CSV")->required();

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand("experiment", "Run a replicated simulation experiment");
  experiment->add_option("--spec", exp_args.spec, "JSON experiment file")
      ->required()
      ->check(CLI::ExistingFile);
  experiment->add_option("--reps", exp_args.reps, "Replications (overrides the file)");
  experiment->add_option("--seed", exp_args.seed, "Base seed (overrides the file)");
  experiment->add_option("--threads", exp_args.threads, "OpenMP threads (0 keeps the default)");
  experiment->add_option("--out", exp_args.out, "Output directory")->required();

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (explain) {
    std::cout << io::explain_config();
    return kOk;
  }

  try {
    if (*simulate) {
      return run_simulate(sim_args);
    }
    if (*fitc) {
      if (fit_args.threads > 0) {
        kernels::set_threads(fit_args.threads);
      }
      return run_fit(fit_args);
    }
    if (*evaluate) {
      return run_evaluate(eval_args);
    }
    if (*experiment) {
      if (exp_args.threads > 0) {
        kernels::set_threads(exp_args.threads);
      }
      return run_experiment(exp_args);
    }
  } catch (const io::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::cerr << app.help();
  return kInputError;
}
