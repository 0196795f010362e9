#include "nirt/io.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace nirt::io {

#ifndef NIRT_VERSION
#define NIRT_VERSION "0.0.0"
#endif

const char* const kToolVersion = NIRT_VERSION;

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double x)
{
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where)
{
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  // from_chars rejects a leading '+', which other tools emit.
  if (first != last && *first == '+') {
    ++first;
  }
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw InputError(where + ": expected a number, got '" + text + "'");
  }
  return value;
}

namespace {

std::string to_string(std::size_t n)
{
  return std::to_string(n);
}

std::size_t parse_index(const std::string& text, const std::string& where)
{
  std::size_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError(where + ": expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where)
{
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field.push_back('"');
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw InputError(where + ": unterminated quote");
  }
  out.push_back(std::move(field));
  return out;
}

std::string quote_csv(const std::string& field)
{
  if (field.find_first_of(",\"\n") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out += "\"\"";
    } else if (c == '\n') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + "\"";
}

std::ifstream open_input(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError(path.string() + ": cannot open file");
  }
  return in;
}

std::ofstream open_output(const fs::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError(path.string() + ": cannot write file");
  }
  return out;
}

void strip_cr(std::string& line)
{
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
}

std::string line_ref(const fs::path& path, std::size_t line)
{
  return path.string() + ":" + to_string(line);
}

// Wraps validation failures of the core types so the message names the file.
template <typename F>
auto checked(const fs::path& path, F&& build)
{
  try {
    return build();
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> class_header(const std::string& first, std::size_t T)
{
  std::vector<std::string> h{first};
  for (std::size_t t = 1; t <= T; ++t) {
    h.push_back("t" + to_string(t));
  }
  return h;
}

// Reads a table whose first column is a 1-based running index and whose
// remaining columns are reals.
Dense<double> read_indexed_matrix(const fs::path& path, const std::string& first)
{
  const Table table = read_table(path);
  if (table.header.size() < 2 || table.header[0] != first) {
    throw InputError(path.string() + ": expected a header starting with '" + first + "'");
  }
  const std::size_t cols = table.header.size() - 1;
  std::vector<double> values;
  values.reserve(table.rows.size() * cols);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto where = line_ref(path, r + 2);
    const auto& row = table.rows[r];
    if (parse_index(row[0], where) != r + 1) {
      throw InputError(where + ": rows must be numbered 1, 2, ... in order");
    }
    for (std::size_t c = 1; c < row.size(); ++c) {
      values.push_back(parse_double(row[c], where));
    }
  }
  return Dense<double>(table.rows.size(), cols, std::move(values));
}

void write_indexed_matrix(const fs::path& path, const std::string& first, std::size_t rows,
                          std::size_t cols, const std::vector<double>& values)
{
  Table table;
  table.header = class_header(first, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row{to_string(r + 1)};
    for (std::size_t c = 0; c < cols; ++c) {
      row.push_back(format_double(values[r * cols + c]));
    }
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

} // namespace

Table read_table(const fs::path& path)
{
  auto in = open_input(path);
  Table table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) {
      continue;
    }
    auto fields = split_csv_line(line, line_ref(path, number));
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InputError(line_ref(path, number) + ": expected " + to_string(table.header.size()) +
                       " fields, found " + to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) {
    throw InputError(path.string() + ": file is empty");
  }
  return table;
}

void write_table(const fs::path& path, const Table& table)
{
  auto out = open_output(path);
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      out << (k ? "," : "") << quote_csv(fields[k]);
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    emit(row);
  }
  if (!out) {
    throw InputError(path.string() + ": write failed");
  }
}

ResponseMatrix read_responses(const fs::path& path, bool header)
{
  auto in = open_input(path);
  std::vector<std::uint8_t> values;
  std::size_t n_items = 0;
  std::size_t n_examinees = 0;
  std::string line;
  std::size_t number = 0;
  bool skipped_header = !header;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) {
      continue;
    }
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = split_csv_line(line, line_ref(path, number));
    if (n_examinees == 0) {
      n_items = fields.size();
    } else if (fields.size() != n_items) {
      throw InputError(line_ref(path, number) + ": expected " + to_string(n_items) +
                       " responses, found " + to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (fields[j] != "0" && fields[j] != "1") {
        throw InputError(line_ref(path, number) + ": item " + to_string(j + 1) +
                         ": expected 0 or 1, got '" + fields[j] + "'");
      }
      values.push_back(fields[j] == "1" ? 1 : 0);
    }
    ++n_examinees;
  }
  if (n_examinees == 0) {
    throw InputError(path.string() + ": no responses");
  }
  return checked(path, [&] { return ResponseMatrix(n_examinees, n_items, std::move(values)); });
}

void write_responses(const fs::path& path, const ResponseMatrix& data)
{
  auto out = open_output(path);
  for (std::size_t i = 0; i < data.n_examinees(); ++i) {
    for (std::size_t j = 0; j < data.n_items(); ++j) {
      out << (j ? "," : "") << static_cast<int>(data(i, j));
    }
    out << '\n';
  }
  if (!out) {
    throw InputError(path.string() + ": write failed");
  }
}

void write_icc(const fs::path& path, const ProbIcc& icc)
{
  write_indexed_matrix(path, "item", icc.n_items(), icc.n_classes(), icc.data());
}

ProbIcc read_icc(const fs::path& path)
{
  auto m = read_indexed_matrix(path, "item");
  return checked(path, [&] { return ProbIcc(m.rows(), m.cols(), m.data()); });
}

void write_logits(const fs::path& path, const LogitIcc& w)
{
  write_indexed_matrix(path, "item", w.n_items(), w.n_classes(), w.data());
}

LogitIcc read_logits(const fs::path& path)
{
  auto m = read_indexed_matrix(path, "item");
  return checked(path, [&] { return LogitIcc(m.rows(), m.cols(), m.data()); });
}

void write_classes(const fs::path& path, const std::vector<std::size_t>& classes)
{
  Table table;
  table.header = {"examinee", "class"};
  for (std::size_t i = 0; i < classes.size(); ++i) {
    table.rows.push_back({to_string(i + 1), to_string(classes[i] + 1)});
  }
  write_table(path, table);
}

std::vector<std::size_t> read_classes(const fs::path& path)
{
  const Table table = read_table(path);
  if (table.header != std::vector<std::string>{"examinee", "class"}) {
    throw InputError(path.string() + ": expected header 'examinee,class'");
  }
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto where = line_ref(path, r + 2);
    if (parse_index(table.rows[r][0], where) != r + 1) {
      throw InputError(where + ": rows must be numbered 1, 2, ... in order");
    }
    const std::size_t c = parse_index(table.rows[r][1], where);
    if (c == 0) {
      throw InputError(where + ": classes are numbered from 1");
    }
    out.push_back(c - 1);
  }
  if (out.empty()) {
    throw InputError(path.string() + ": no rows");
  }
  return out;
}

void write_assignment(const fs::path& path, const SoftAssignment& y)
{
  write_indexed_matrix(path, "examinee", y.n_examinees(), y.n_classes(), y.data());
}

SoftAssignment read_assignment(const fs::path& path)
{
  auto m = read_indexed_matrix(path, "examinee");
  return checked(path, [&] { return SoftAssignment(m.rows(), m.cols(), m.data()); });
}

void write_class_sizes(const fs::path& path, const ClassSizes& pi)
{
  Table table;
  table.header = {"class", "pi"};
  for (std::size_t t = 0; t < pi.n_classes(); ++t) {
    table.rows.push_back({to_string(t + 1), format_double(pi[t])});
  }
  write_table(path, table);
}

ClassSizes read_class_sizes(const fs::path& path)
{
  auto m = read_indexed_matrix(path, "class");
  return checked(path, [&] { return ClassSizes(m.data()); });
}

void write_loglik(const fs::path& path, const std::vector<double>& trace)
{
  Table table;
  table.header = {"iteration", "loglik"};
  for (std::size_t k = 0; k < trace.size(); ++k) {
    table.rows.push_back({to_string(k + 1), format_double(trace[k])});
  }
  write_table(path, table);
}

void write_solver_reports(const fs::path& path, const std::vector<SolverReport>& reports)
{
  Table table;
  table.header = {"item",       "objective",     "kkt_residual", "feasibility_violation",
                  "iterations", "converged"};
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& r = reports[j];
    table.rows.push_back({to_string(j + 1), format_double(r.objective),
                          format_double(r.kkt_residual), format_double(r.feasibility_violation),
                          std::to_string(r.iterations), r.converged ? "1" : "0"});
  }
  write_table(path, table);
}

void write_items(const fs::path& path, const std::vector<sim::TrueItem>& items)
{
  Table table;
  table.header = {"item", "kind", "a", "b", "a1", "a2"};
  for (std::size_t j = 0; j < items.size(); ++j) {
    const auto& it = items[j];
    if (it.kind == sim::ItemKind::TwoPL) {
      table.rows.push_back(
          {to_string(j + 1), "2PL", format_double(it.a), format_double(it.b), "", ""});
    } else {
      table.rows.push_back({to_string(j + 1), "3PN", "", format_double(it.b),
                            format_double(it.a1), format_double(it.a2)});
    }
  }
  write_table(path, table);
}

std::vector<sim::TrueItem> read_items(const fs::path& path)
{
  const Table table = read_table(path);
  if (table.header != std::vector<std::string>{"item", "kind", "a", "b", "a1", "a2"}) {
    throw InputError(path.string() + ": expected header 'item,kind,a,b,a1,a2'");
  }
  std::vector<sim::TrueItem> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto where = line_ref(path, r + 2);
    const auto& row = table.rows[r];
    if (row[1] == "2PL") {
      out.push_back(sim::TrueItem::two_pl(parse_double(row[2], where), parse_double(row[3], where)));
    } else if (row[1] == "3PN") {
      out.push_back(sim::TrueItem::three_pn(parse_double(row[4], where),
                                            parse_double(row[5], where),
                                            parse_double(row[3], where)));
    } else {
      throw InputError(where + ": kind must be 2PL or 3PN, got '" + row[1] + "'");
    }
  }
  return out;
}

void write_thetas(const fs::path& path, const std::vector<double>& thetas)
{
  Table table;
  table.header = {"examinee", "theta"};
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    table.rows.push_back({to_string(i + 1), format_double(thetas[i])});
  }
  write_table(path, table);
}

namespace {

std::vector<std::string> condition_fields(const eval::Condition& c)
{
  return {to_string(c.n_examinees), to_string(c.n_items), format_double(c.rho)};
}

} // namespace

void write_results(const fs::path& path, const std::vector<eval::Summary>& rows)
{
  Table table;
  table.header = {"examinees",     "items",          "rho",         "model",
                  "n_ok",          "n_failed",       "n_max_iter",  "mean_rmse_icc",
                  "sd_rmse_icc",   "mean_rmse_class", "sd_rmse_class", "mean_iterations"};
  for (const auto& s : rows) {
    auto row = condition_fields(s.condition);
    row.insert(row.end(), {s.model, to_string(s.n_ok), to_string(s.n_failed),
                           to_string(s.n_max_iterations), format_double(s.mean_rmse_icc),
                           format_double(s.sd_rmse_icc), format_double(s.mean_rmse_class),
                           format_double(s.sd_rmse_class), format_double(s.mean_iterations)});
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

void write_replications(const fs::path& path, const eval::ExperimentSpec& spec,
                        const std::vector<eval::Replication>& rows)
{
  Table table;
  table.header = {"examinees", "items",    "rho",      "replication", "seed",
                  "data_digest", "model",  "rmse_icc", "rmse_class",  "iterations",
                  "terminated_by", "failed", "error"};
  for (const auto& r : rows) {
    auto row = condition_fields(spec.conditions[r.condition]);
    row.insert(row.end(),
               {to_string(r.replication), std::to_string(r.seed), hex64(r.data_digest), r.model,
                r.failed ? "" : format_double(r.rmse_icc),
                r.failed ? "" : format_double(r.rmse_class),
                r.failed ? "" : std::to_string(r.em_iterations),
                r.failed ? "" : to_string(r.terminated_by), r.failed ? "1" : "0", r.error});
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

void write_timings(const fs::path& path, const eval::ExperimentSpec& spec,
                   const std::vector<eval::Replication>& rows)
{
  Table table;
  table.header = {"examinees", "items", "rho", "replication", "model", "wall_time_seconds"};
  for (const auto& r : rows) {
    auto row = condition_fields(spec.conditions[r.condition]);
    row.insert(row.end(), {to_string(r.replication), r.model, format_double(r.wall_time_seconds)});
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

void write_plot(const fs::path& path, const eval::PlotSeries& series)
{
  Table table;
  table.header = {"t", "true"};
  table.header.insert(table.header.end(), series.models.begin(), series.models.end());
  for (std::size_t t = 0; t < series.truth.size(); ++t) {
    std::vector<std::string> row{to_string(t + 1), format_double(series.truth[t])};
    for (const auto& fitted : series.fitted) {
      row.push_back(format_double(fitted[t]));
    }
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

//----------------------------------------------------------------------------
// Configuration
//----------------------------------------------------------------------------

namespace {

std::string read_text(const fs::path& path)
{
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& source)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // what() reads "[json.exception.parse_error.101] parse error at line L, column C: ..."
    std::string msg = e.what();
    const auto pos = msg.find("] ");
    throw InputError(source + ": " + (pos == std::string::npos ? msg : msg.substr(pos + 2)));
  }
}

class Fields
{
public:
  Fields(const json& object, std::string where) : object_(object), where_(std::move(where))
  {
    if (!object_.is_object()) {
      throw InputError(where_ + ": expected a JSON object");
    }
  }

  void allow(std::initializer_list<const char*> keys) const
  {
    for (const auto& item : object_.items()) {
      bool known = false;
      for (const char* k : keys) {
        known = known || item.key() == k;
      }
      if (!known) {
        throw InputError(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

  bool has(const char* key) const { return object_.contains(key); }
  const json& at(const char* key) const { return object_.at(key); }
  std::string field(const char* key) const { return where_ + ": " + key; }

  std::uint64_t count(const char* key, std::uint64_t fallback, std::uint64_t min = 0) const
  {
    if (!has(key)) {
      return fallback;
    }
    return to_count(object_.at(key), field(key), min);
  }

  double real(const char* key, double fallback) const
  {
    if (!has(key)) {
      return fallback;
    }
    return to_real(object_.at(key), field(key));
  }

  static std::uint64_t to_count(const json& v, const std::string& where, std::uint64_t min)
  {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw InputError(where + ": expected a nonnegative integer");
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min) {
      throw InputError(where + ": must be at least " + std::to_string(min));
    }
    return n;
  }

  static double to_real(const json& v, const std::string& where)
  {
    if (!v.is_number()) {
      throw InputError(where + ": expected a number");
    }
    return v.get<double>();
  }

  static std::vector<double> to_reals(const json& v, const std::string& where)
  {
    if (!v.is_array()) {
      throw InputError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      out.push_back(to_real(v[k], where + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

private:
  const json& object_;
  std::string where_;
};

json ladder_json(const ClassLadder& ladder)
{
  return json{{"boundaries", ladder.boundaries()}, {"medians", ladder.medians()}};
}

// Turns validation errors into input errors that name the source.
template <typename T>
void validated(const T& value, const std::string& source)
{
  try {
    value.validate();
  } catch (const Error& e) {
    throw InputError(source + ": " + e.what());
  }
}

} // namespace

sim::SimConfig parse_sim_config(const std::string& text, const std::string& source)
{
  const json doc = parse_json(text, source);
  const Fields f(doc, source);
  f.allow({"examinees", "items", "rho", "seed", "ladder"});
  sim::SimConfig config;
  config.n_examinees = f.count("examinees", config.n_examinees, 1);
  config.n_items = f.count("items", config.n_items, 1);
  config.rho = f.real("rho", config.rho);
  config.seed = f.count("seed", config.seed);
  if (f.has("ladder")) {
    const Fields lf(f.at("ladder"), f.field("ladder"));
    lf.allow({"boundaries", "medians"});
    if (!lf.has("boundaries") || !lf.has("medians")) {
      throw InputError(f.field("ladder") + ": needs both 'boundaries' and 'medians'");
    }
    try {
      config.ladder = ClassLadder(Fields::to_reals(lf.at("boundaries"), lf.field("boundaries")),
                                  Fields::to_reals(lf.at("medians"), lf.field("medians")));
    } catch (const InputError&) {
      throw;
    } catch (const Error& e) {
      throw InputError(f.field("ladder") + ": " + e.what());
    }
  }
  validated(config, source);
  return config;
}

sim::SimConfig load_sim_config(const fs::path& path)
{
  return parse_sim_config(read_text(path), path.string());
}

std::string canonical_json(const sim::SimConfig& config)
{
  const json doc{{"examinees", config.n_examinees},
                 {"items", config.n_items},
                 {"rho", config.rho},
                 {"seed", config.seed},
                 {"ladder", ladder_json(config.ladder)}};
  return doc.dump();
}

eval::ExperimentSpec parse_experiment_spec(const std::string& text, const std::string& source)
{
  const json doc = parse_json(text, source);
  const Fields f(doc, source);
  f.allow({"conditions", "grid", "models", "reps", "seed", "classes", "max_iterations", "tol",
           "plot_items"});
  eval::ExperimentSpec spec;

  if (f.has("conditions") == f.has("grid")) {
    throw InputError(source + ": give exactly one of 'conditions' or 'grid'");
  }
  if (f.has("conditions")) {
    const json& list = f.at("conditions");
    if (!list.is_array()) {
      throw InputError(f.field("conditions") + ": expected an array");
    }
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Fields c(list[k], f.field("conditions") + "[" + std::to_string(k) + "]");
      c.allow({"examinees", "items", "rho"});
      eval::Condition cond;
      cond.n_examinees = c.count("examinees", cond.n_examinees, 1);
      cond.n_items = c.count("items", cond.n_items, 1);
      cond.rho = c.real("rho", cond.rho);
      spec.conditions.push_back(cond);
    }
  } else {
    const Fields g(f.at("grid"), f.field("grid"));
    g.allow({"examinees", "items", "rho"});
    for (const char* key : {"examinees", "items", "rho"}) {
      if (!g.has(key) || !g.at(key).is_array() || g.at(key).empty()) {
        throw InputError(g.field(key) + ": expected a nonempty array");
      }
    }
    for (std::size_t a = 0; a < g.at("examinees").size(); ++a) {
      for (std::size_t b = 0; b < g.at("items").size(); ++b) {
        for (std::size_t c = 0; c < g.at("rho").size(); ++c) {
          eval::Condition cond;
          cond.n_examinees = Fields::to_count(g.at("examinees")[a], g.field("examinees"), 1);
          cond.n_items = Fields::to_count(g.at("items")[b], g.field("items"), 1);
          cond.rho = Fields::to_real(g.at("rho")[c], g.field("rho"));
          spec.conditions.push_back(cond);
        }
      }
    }
  }

  if (!f.has("models") || !f.at("models").is_array()) {
    throw InputError(f.field("models") + ": expected an array of model names");
  }
  for (std::size_t k = 0; k < f.at("models").size(); ++k) {
    const json& m = f.at("models")[k];
    const std::string where = f.field("models") + "[" + std::to_string(k) + "]";
    if (!m.is_string()) {
      throw InputError(where + ": expected a model name such as \"MHM\" or \"SCM(2)\"");
    }
    try {
      spec.models.push_back(eval::ModelSpec::parse(m.get<std::string>()));
    } catch (const Error& e) {
      throw InputError(where + ": " + e.what());
    }
  }

  spec.replications = f.count("reps", spec.replications, 1);
  spec.base_seed = f.count("seed", spec.base_seed);
  spec.n_classes = f.count("classes", spec.n_classes, 1);
  spec.max_iterations = static_cast<int>(f.count("max_iterations", spec.max_iterations, 1));
  spec.tol = f.real("tol", spec.tol);
  if (!(spec.tol > 0.0)) {
    throw InputError(f.field("tol") + ": must be positive");
  }
  if (f.has("plot_items")) {
    const json& list = f.at("plot_items");
    if (!list.is_array()) {
      throw InputError(f.field("plot_items") + ": expected an array of item numbers");
    }
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto j = Fields::to_count(list[k], f.field("plot_items"), 1);
      spec.plot_items.push_back(static_cast<std::size_t>(j - 1));
    }
  }
  validated(spec, source);
  return spec;
}

eval::ExperimentSpec load_experiment_spec(const fs::path& path)
{
  return parse_experiment_spec(read_text(path), path.string());
}

std::string canonical_json(const eval::ExperimentSpec& spec)
{
  json conditions = json::array();
  for (const auto& c : spec.conditions) {
    conditions.push_back({{"examinees", c.n_examinees}, {"items", c.n_items}, {"rho", c.rho}});
  }
  json models = json::array();
  for (const auto& m : spec.models) {
    models.push_back(m.name());
  }
  json plots = json::array();
  for (std::size_t j : spec.plot_items) {
    plots.push_back(j + 1);
  }
  const json doc{{"conditions", conditions},
                 {"models", models},
                 {"reps", spec.replications},
                 {"seed", spec.base_seed},
                 {"classes", spec.n_classes},
                 {"max_iterations", spec.max_iterations},
                 {"tol", spec.tol},
                 {"plot_items", plots}};
  return doc.dump();
}

std::string explain_config()
{
  const sim::SimConfig sim_defaults;
  const EmConfig em_defaults;
  const eval::ExperimentSpec exp_defaults;
  std::ostringstream os;
  os << "simulate --config <file>: JSON object\n"
     << "  examinees   positive integer, default " << sim_defaults.n_examinees << "\n"
     << "  items       positive integer, default " << sim_defaults.n_items << "\n"
     << "  rho         share of 3PN items in [0, 1], default " << format_double(sim_defaults.rho)
     << "; the count round(rho * items) takes the last item numbers\n"
     << "  seed        nonnegative integer, default " << sim_defaults.seed << "\n"
     << "  ladder      {\"boundaries\": [9 cut points], \"medians\": [10 values]},\n"
     << "              default " << ladder_json(sim_defaults.ladder).dump() << "\n"
     << "\n"
     << "fit options\n"
     << "  --model     mhm | scm (required)\n"
     << "  --gamma     smoothness budget for scm, a number >= 0 or inf (required for scm)\n"
     << "  --classes   default " << em_defaults.n_classes << "\n"
     << "  --max-iter  EM iteration cap, default " << em_defaults.max_iterations << "\n"
     << "  --tol       subproblem tolerance, default " << format_double(em_defaults.subproblem_tol)
     << "\n"
     << "  fixed       class-size floor " << format_double(em_defaults.pi_floor)
     << ", probability clip " << format_double(kProbEpsilon) << ", logit box +-"
     << format_double(kLogitBound) << "\n"
     << "\n"
     << "experiment --spec <file>: JSON object\n"
     << "  conditions  [{\"examinees\": n, \"items\": n, \"rho\": x}, ...]\n"
     << "  grid        {\"examinees\": [...], \"items\": [...], \"rho\": [...]} instead of conditions;\n"
     << "              expanded with examinees outermost and rho innermost\n"
     << "  models      [\"MHM\", \"SCM(0)\", \"SCM(2)\", \"SCM(inf)\", ...] (required)\n"
     << "  reps        default " << exp_defaults.replications << " (--reps overrides)\n"
     << "  seed        base seed, replication r uses seed + r, default " << exp_defaults.base_seed
     << " (--seed overrides)\n"
     << "  classes     must be " << exp_defaults.n_classes << "\n"
     << "  max_iterations  default " << exp_defaults.max_iterations << "\n"
     << "  tol         default " << format_double(exp_defaults.tol) << "\n"
     << "  plot_items  item numbers (from 1) whose fitted curves are written, default none\n";
  return os.str();
}

std::string digest_hex(const std::string& text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::string hex64(std::uint64_t value)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string utc_now()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& path, const Manifest& manifest)
{
  nlohmann::ordered_json doc;
  doc["command"] = manifest.command;
  doc["tool_version"] = kToolVersion;
  doc["config_digest"] = manifest.config_digest;
  doc["seed"] = manifest.seed;
  doc["started"] = manifest.started;
  doc["finished"] = manifest.finished;
  doc["status"] = manifest.status;
  for (const auto& [key, value] : manifest.extra) {
    doc[key] = value;
  }
  doc["outputs"] = manifest.outputs;
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

void ensure_directory(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError(dir.string() + ": cannot create directory");
  }
}

} // namespace nirt::io
