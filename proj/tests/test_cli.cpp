// Runs the nirt executable end to end and checks files and exit codes.
#include "nirt/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace nirt;

namespace {

const fs::path& root()
{
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "nirt_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args)
{
  const std::string cmd = std::string(NIRT_CLI) + " " + args + " > " +
                          (root() / "last_stdout.txt").string() + " 2> " +
                          (root() / "last_stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write(const std::string& name, const std::string& text)
{
  const fs::path p = root() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string q(const fs::path& p)
{
  return "'" + p.string() + "'";
}

// Shared (1000, 30, 50%) dataset.
const fs::path& dataset()
{
  static const fs::path dir = [] {
    const auto config = write("big.json", R"({"examinees": 1000, "items": 30, "rho": 0.5, "seed": 4})");
    const fs::path out = root() / "big";
    REQUIRE(run("simulate --config " + q(config) + " --out " + q(out)) == 0);
    return out;
  }();
  return dir;
}

} // namespace

TEST_CASE("simulate writes the dataset and a manifest")
{
  const auto config = write("min.json", R"({"examinees": 10, "items": 3, "rho": 0, "seed": 1})");
  REQUIRE(run("simulate --config " + q(config) + " --out " + q(root() / "min1")) == 0);
  for (const char* f : {"responses.csv", "true_classes.csv", "true_icc.csv", "items.csv",
                        "thetas.csv", "manifest.json"}) {
    CHECK(fs::exists(root() / "min1" / f));
  }
  const auto u = io::read_responses(root() / "min1" / "responses.csv");
  CHECK(u.n_examinees() == 10);
  CHECK(u.n_items() == 3);
  const std::string manifest = slurp(root() / "min1" / "manifest.json");
  CHECK(manifest.find("\"config_digest\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 1") != std::string::npos);

  REQUIRE(run("simulate --config " + q(config) + " --out " + q(root() / "min2")) == 0);
  for (const char* f :
       {"responses.csv", "true_classes.csv", "true_icc.csv", "items.csv", "thetas.csv"}) {
    CHECK(slurp(root() / "min1" / f) == slurp(root() / "min2" / f));
  }
}

TEST_CASE("simulate places round(rho J) 3PN items")
{
  const auto config = write("r20.json", R"({"examinees": 20, "items": 60, "rho": 0.2, "seed": 8})");
  REQUIRE(run("simulate --config " + q(config) + " --out " + q(root() / "r20")) == 0);
  const auto items = io::read_items(root() / "r20" / "items.csv");
  const auto n = std::count_if(items.begin(), items.end(),
                               [](const sim::TrueItem& it) { return it.kind == sim::ItemKind::ThreePN; });
  CHECK(n == 12);
}

TEST_CASE("simulate rejects bad configs with exit code 2")
{
  CHECK(run("simulate --config " + q(write("b1.json", "{\"rho\": 3}")) + " --out " +
            q(root() / "b1")) == 2);
  CHECK(slurp(root() / "last_stderr.txt").find("rho") != std::string::npos);
  CHECK(run("simulate --config " + q(write("b2.json", "{\"rho\": }")) + " --out " +
            q(root() / "b2")) == 2);
  CHECK(slurp(root() / "last_stderr.txt").find("line 1") != std::string::npos);
  CHECK(run("simulate --config " + q(root() / "absent.json") + " --out " + q(root() / "b3")) == 2);
}

TEST_CASE("fit SCM(0) gives equally spaced logits")
{
  const fs::path out = root() / "fit0";
  REQUIRE(run("fit --data " + q(dataset() / "responses.csv") +
              " --model scm --gamma 0 --out " + q(out)) == 0);
  const auto w = io::read_logits(out / "logits.csv");
  for (std::size_t j = 0; j < w.n_items(); ++j) {
    for (std::size_t t = 0; t + 2 < w.n_classes(); ++t) {
      CHECK(std::abs(w(j, t + 2) - 2 * w(j, t + 1) + w(j, t)) <= 1e-6);
    }
  }
}

TEST_CASE("fit MHM gives monotone curves")
{
  const fs::path out = root() / "fitm";
  REQUIRE(run("fit --data " + q(dataset() / "responses.csv") + " --model mhm --out " + q(out)) == 0);
  const auto icc = io::read_icc(out / "icc.csv");
  for (std::size_t j = 0; j < icc.n_items(); ++j) {
    const auto row = icc.row(j);
    CHECK(std::is_sorted(row.begin(), row.end()));
  }
  CHECK_FALSE(fs::exists(out / "logits.csv"));
}

TEST_CASE("fit SCM(2) writes every output and evaluate scores it")
{
  const fs::path out = root() / "fit2";
  REQUIRE(run("fit --data " + q(dataset() / "responses.csv") +
              " --model scm --gamma 2 --threads 2 --out " + q(out)) == 0);
  for (const char* f : {"icc.csv", "logits.csv", "classes.csv", "assignment.csv",
                        "class_sizes.csv", "loglik.csv", "solver.csv", "manifest.json"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(io::read_classes(out / "classes.csv").size() == 1000);
  CHECK(slurp(out / "manifest.json").find("\"status\": \"ok\"") != std::string::npos);

  REQUIRE(run("evaluate --truth " + q(dataset()) + " --estimate " + q(out) + " --out " +
              q(root() / "m2.csv")) == 0);
  const auto metrics = io::read_table(root() / "m2.csv");
  REQUIRE(metrics.rows.size() == 2);
  const double rc = io::parse_double(metrics.rows[0][1], "rc");
  const double ri = io::parse_double(metrics.rows[1][1], "ri");
  CHECK(rc == doctest::Approx(eval::rmse_classes(io::read_classes(dataset() / "true_classes.csv"),
                                                 io::read_classes(out / "classes.csv"))));
  CHECK(ri > 0.0);
  CHECK(ri < 0.2);
}

TEST_CASE("fit at the iteration cap exits 3 and still writes results")
{
  const fs::path out = root() / "fitcap";
  CHECK(run("fit --data " + q(dataset() / "responses.csv") +
            " --model scm --gamma 2 --max-iter 1 --out " + q(out)) == 3);
  CHECK(fs::exists(out / "icc.csv"));
  CHECK(slurp(out / "manifest.json").find("not_converged") != std::string::npos);
}

TEST_CASE("fit input errors exit 2")
{
  const auto bad = write("bad.csv", "1,0,1\n0,x,1\n");
  CHECK(run("fit --data " + q(bad) + " --model mhm --out " + q(root() / "fb")) == 2);
  CHECK(slurp(root() / "last_stderr.txt").find("bad.csv:2") != std::string::npos);
  CHECK(run("fit --data " + q(root() / "absent.csv") + " --model mhm --out " + q(root() / "fb")) == 2);
  CHECK(run("fit --data " + q(dataset() / "responses.csv") + " --model scm --out " +
            q(root() / "fb")) == 2);
  CHECK(run("fit --data " + q(dataset() / "responses.csv") + " --model 2plm --out " +
            q(root() / "fb")) == 2);
  CHECK(run("fit --data " + q(dataset() / "responses.csv") + " --model scm --gamma -1 --out " +
            q(root() / "fb")) == 2);
}

TEST_CASE("evaluate")
{
  SUBCASE("estimate equal to truth")
  {
    const fs::path est = root() / "same";
    fs::create_directories(est);
    fs::copy_file(dataset() / "true_classes.csv", est / "classes.csv",
                  fs::copy_options::overwrite_existing);
    fs::copy_file(dataset() / "true_icc.csv", est / "icc.csv", fs::copy_options::overwrite_existing);
    REQUIRE(run("evaluate --truth " + q(dataset()) + " --estimate " + q(est) + " --out " +
                q(root() / "zero.csv")) == 0);
    CHECK(slurp(root() / "zero.csv") == "metric,value\nrmse_class,0\nrmse_icc,0\n");
  }
  SUBCASE("toy files")
  {
    const fs::path truth = root() / "toy_truth";
    const fs::path est = root() / "toy_est";
    fs::create_directories(truth);
    fs::create_directories(est);
    std::ofstream(truth / "true_classes.csv") << "examinee,class\n1,1\n2,1\n";
    std::ofstream(truth / "true_icc.csv") << "item,t1,t2\n1,0.3,0.5\n";
    std::ofstream(est / "classes.csv") << "examinee,class\n1,2\n2,1\n";
    std::ofstream(est / "icc.csv") << "item,t1,t2\n1,0.5,0.5\n";
    REQUIRE(run("evaluate --truth " + q(truth) + " --estimate " + q(est) + " --out " +
                q(root() / "toy.csv")) == 0);
    const auto t = io::read_table(root() / "toy.csv");
    CHECK(io::parse_double(t.rows[0][1], "") == doctest::Approx(std::sqrt(0.5)));
    CHECK(io::parse_double(t.rows[1][1], "") == doctest::Approx(std::sqrt(0.02)));
  }
  SUBCASE("missing or mismatched files")
  {
    CHECK(run("evaluate --truth " + q(dataset()) + " --estimate " + q(root() / "nowhere") +
              " --out " + q(root() / "x.csv")) == 2);
    CHECK(run("evaluate --truth " + q(root() / "toy_truth") + " --estimate " + q(root() / "fit2") +
              " --out " + q(root() / "x.csv")) == 2);
  }
}

TEST_CASE("experiment tables are deterministic")
{
  const auto spec = write("exp.json", R"j({"conditions": [{"examinees": 200, "items": 10, "rho": 0.5}],
    "models": ["MHM", "SCM(2)"], "reps": 1, "seed": 3, "plot_items": [10]})j");
  REQUIRE(run("experiment --spec " + q(spec) + " --threads 1 --out " + q(root() / "e1")) == 0);
  REQUIRE(run("experiment --spec " + q(spec) + " --reps 2 --seed 3 --threads 3 --out " +
              q(root() / "e2")) == 0);
  REQUIRE(run("experiment --spec " + q(spec) + " --reps 2 --threads 1 --out " + q(root() / "e3")) == 0);

  const auto results = io::read_table(root() / "e1" / "results.csv");
  CHECK(results.rows.size() == 2);
  const auto plot = io::read_table(root() / "e1" / "plots" / "cond1_item10.csv");
  CHECK(plot.header == std::vector<std::string>{"t", "true", "MHM", "SCM(2)"});
  CHECK(plot.rows.size() == 10);

  CHECK(slurp(root() / "e2" / "results.csv") == slurp(root() / "e3" / "results.csv"));
  CHECK(slurp(root() / "e2" / "replications.csv") == slurp(root() / "e3" / "replications.csv"));
  CHECK(fs::exists(root() / "e2" / "timings.csv"));
}

TEST_CASE("explain-config and usage errors")
{
  CHECK(run("--explain-config") == 0);
  CHECK(slurp(root() / "last_stdout.txt").find("examinees") != std::string::npos);
  CHECK(run("") == 2);
  CHECK(run("fit --model mhm") == 2);
  CHECK(run("--help") == 0);
}
