#include "nirt/io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>

using namespace nirt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / "nirt_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream(path, std::ios::binary) << text;
}

} // namespace

TEST_CASE("doubles print in shortest round-trip form")
{
  oracle::Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const double x = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.integer(-12, 12));
    CHECK(io::parse_double(io::format_double(x), "x") == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(2.0) == "2");
  CHECK(io::parse_double("+1.5", "x") == 1.5);
  CHECK_THROWS_AS(io::parse_double("1.5x", "x"), io::InputError);
  CHECK_THROWS_AS(io::parse_double("", "x"), io::InputError);
}

TEST_CASE("simulated dataset files round-trip exactly")
{
  sim::SimConfig config;
  config.n_examinees = 200;
  config.n_items = 15;
  config.rho = 0.4;
  config.seed = 31;
  const auto data = sim::generate(config);

  io::write_responses(scratch("r.csv"), data.responses);
  CHECK(io::read_responses(scratch("r.csv")) == data.responses);
  io::write_classes(scratch("c.csv"), data.true_classes);
  CHECK(io::read_classes(scratch("c.csv")) == data.true_classes);
  io::write_icc(scratch("icc.csv"), data.true_icc);
  CHECK(io::read_icc(scratch("icc.csv")) == data.true_icc);
  io::write_items(scratch("items.csv"), data.items);
  CHECK(io::read_items(scratch("items.csv")) == data.items);
}

TEST_CASE("fit outputs round-trip exactly")
{
  sim::SimConfig config;
  config.n_examinees = 150;
  config.n_items = 8;
  config.seed = 2;
  const auto data = sim::generate(config);
  const auto result = fit(data.responses, EmConfig{});
  REQUIRE(result.logits);
  io::write_logits(scratch("w.csv"), *result.logits);
  CHECK(io::read_logits(scratch("w.csv")) == *result.logits);
  io::write_assignment(scratch("y.csv"), result.assignment);
  CHECK(io::read_assignment(scratch("y.csv")) == result.assignment);
  io::write_class_sizes(scratch("pi.csv"), result.class_sizes);
  CHECK(io::read_class_sizes(scratch("pi.csv")) == result.class_sizes);
}

TEST_CASE("response files with a header row")
{
  write_text(scratch("h.csv"), "q1,q2,q3\r\n1,0,1\r\n0,0,1\r\n");
  const auto u = io::read_responses(scratch("h.csv"), true);
  CHECK(u.n_examinees() == 2);
  CHECK(u.n_items() == 3);
  CHECK(u(0, 0) == 1);
  CHECK_THROWS_AS(io::read_responses(scratch("h.csv"), false), io::InputError);
}

TEST_CASE("malformed response files name the line")
{
  write_text(scratch("bad1.csv"), "1,0\n1,2\n");
  try {
    io::read_responses(scratch("bad1.csv"));
    FAIL("expected an error");
  } catch (const io::InputError& e) {
    CHECK(std::string(e.what()).find("bad1.csv:2") != std::string::npos);
  }
  write_text(scratch("bad2.csv"), "1,0\n1\n");
  CHECK_THROWS_AS(io::read_responses(scratch("bad2.csv")), io::InputError);
  write_text(scratch("empty.csv"), "");
  CHECK_THROWS_AS(io::read_responses(scratch("empty.csv")), io::InputError);
  CHECK_THROWS_AS(io::read_responses(scratch("missing.csv")), io::InputError);
}

TEST_CASE("tables quote fields that need it")
{
  io::Table t;
  t.header = {"a", "b"};
  t.rows = {{"x,y", "say \"hi\""}};
  io::write_table(scratch("q.csv"), t);
  const auto back = io::read_table(scratch("q.csv"));
  CHECK(back.rows == t.rows);
}

TEST_CASE("non-monotone ICC files are rejected")
{
  write_text(scratch("nm.csv"), "item,t1,t2\n1,0.6,0.4\n");
  CHECK_THROWS_AS(io::read_icc(scratch("nm.csv")), io::InputError);
}

TEST_CASE("simulation config parsing")
{
  const auto c = io::parse_sim_config(R"({"examinees": 10, "items": 3, "rho": 0, "seed": 1})", "s");
  CHECK(c.n_examinees == 10);
  CHECK(c.n_items == 3);
  CHECK(c.ladder == ClassLadder::standard_ten());
  // Canonical text parses back to the same configuration.
  const auto again = io::parse_sim_config(io::canonical_json(c), "s");
  CHECK(io::canonical_json(again) == io::canonical_json(c));

  const auto defaults = io::parse_sim_config("{}", "s");
  CHECK(defaults.n_examinees == 1000);

  CHECK_THROWS_WITH_AS(io::parse_sim_config(R"({"rho": 2})", "s"), "s: rho: must lie in [0, 1]",
                       io::InputError);
  CHECK_THROWS_WITH_AS(io::parse_sim_config(R"({"items": -3})", "s"),
                       "s: items: expected a nonnegative integer", io::InputError);
  CHECK_THROWS_WITH_AS(io::parse_sim_config(R"({"seeds": 3})", "s"), "s: unknown key 'seeds'",
                       io::InputError);
  try {
    io::parse_sim_config("{\n  \"items\": 3,\n  \"rho\": ,\n}", "cfg.json");
    FAIL("expected an error");
  } catch (const io::InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("experiment spec parsing")
{
  const auto s = io::parse_experiment_spec(
      R"j({"grid": {"examinees": [1000, 3000], "items": [30, 60], "rho": [0, 0.2, 0.5]},
          "models": ["MHM", "SCM(0)", "scm:2", "SCM(inf)"], "plot_items": [1, 30]})j",
      "e");
  REQUIRE(s.conditions.size() == 12);
  CHECK(s.conditions[0].n_examinees == 1000);
  CHECK(s.conditions[1].rho == 0.2);
  CHECK(s.conditions[3].n_items == 60);
  CHECK(s.conditions[11].n_examinees == 3000);
  CHECK(s.models.size() == 4);
  CHECK(s.plot_items == std::vector<std::size_t>{0, 29});
  CHECK(s.replications == 10);
  const auto again = io::parse_experiment_spec(io::canonical_json(s), "e");
  CHECK(io::canonical_json(again) == io::canonical_json(s));

  CHECK_THROWS_AS(io::parse_experiment_spec(R"({"models": ["MHM"]})", "e"), io::InputError);
  CHECK_THROWS_AS(
      io::parse_experiment_spec(R"({"conditions": [{"items": 5}], "models": ["2PLM"]})", "e"),
      io::InputError);
  CHECK_THROWS_AS(io::parse_experiment_spec(
                      R"({"conditions": [{"items": 5}], "models": ["MHM"], "plot_items": [6]})",
                      "e"),
                  io::InputError);
}

TEST_CASE("digests are stable")
{
  // FNV-1a reference values.
  CHECK(io::digest_hex("") == "cbf29ce484222325");
  CHECK(io::digest_hex("a") == "af63dc4c8601ec8c");
}
