#ifndef NIRT_IO_HPP
#define NIRT_IO_HPP

// File formats used by the command-line tool.
//
// Responses are headerless CSV of 0/1 (one row per examinee), optionally
// preceded by a row of item labels. Every other table is CSV with a header
// row. Reals are written in the shortest form that reads back to the same
// double, so write-then-read is exact.

#include "nirt/em.hpp"
#include "nirt/eval.hpp"
#include "nirt/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nirt::io {

/// Input problems the user can fix: unreadable files, malformed content,
/// invalid configuration. Messages name the file and line or field.
class InputError : public Error
{
public:
  using Error::Error;
};

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// Parses a whole field as a double; InputError with `where` on failure.
double parse_double(const std::string& text, const std::string& where);

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table);

ResponseMatrix read_responses(const std::filesystem::path& path, bool header = false);
void write_responses(const std::filesystem::path& path, const ResponseMatrix& data);

/// Columns item, t1..tT; items and classes numbered from 1.
void write_icc(const std::filesystem::path& path, const ProbIcc& icc);
ProbIcc read_icc(const std::filesystem::path& path);
void write_logits(const std::filesystem::path& path, const LogitIcc& w);
LogitIcc read_logits(const std::filesystem::path& path);

/// Columns examinee, class; both numbered from 1 in the file, 0-based in memory.
void write_classes(const std::filesystem::path& path, const std::vector<std::size_t>& classes);
std::vector<std::size_t> read_classes(const std::filesystem::path& path);

void write_assignment(const std::filesystem::path& path, const SoftAssignment& y);
SoftAssignment read_assignment(const std::filesystem::path& path);

void write_class_sizes(const std::filesystem::path& path, const ClassSizes& pi);
ClassSizes read_class_sizes(const std::filesystem::path& path);

void write_loglik(const std::filesystem::path& path, const std::vector<double>& trace);
void write_solver_reports(const std::filesystem::path& path,
                          const std::vector<SolverReport>& reports);

void write_items(const std::filesystem::path& path, const std::vector<sim::TrueItem>& items);
std::vector<sim::TrueItem> read_items(const std::filesystem::path& path);
void write_thetas(const std::filesystem::path& path, const std::vector<double>& thetas);

/// Experiment outputs. results.csv and replications.csv carry no timing
/// so that they are identical across runs; wall times go to timings.csv.
void write_results(const std::filesystem::path& path, const std::vector<eval::Summary>& rows);
void write_replications(const std::filesystem::path& path, const eval::ExperimentSpec& spec,
                        const std::vector<eval::Replication>& rows);
void write_timings(const std::filesystem::path& path, const eval::ExperimentSpec& spec,
                   const std::vector<eval::Replication>& rows);
/// Columns t, true, one per model.
void write_plot(const std::filesystem::path& path, const eval::PlotSeries& series);

//----------------------------------------------------------------------------
// Configuration files (JSON)
//----------------------------------------------------------------------------

sim::SimConfig load_sim_config(const std::filesystem::path& path);
eval::ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Same parsing from in-memory text; `source` names it in messages.
sim::SimConfig parse_sim_config(const std::string& text, const std::string& source);
eval::ExperimentSpec parse_experiment_spec(const std::string& text, const std::string& source);

/// Compact JSON with sorted keys and every default filled in. Parsing it
/// gives back the same configuration.
std::string canonical_json(const sim::SimConfig& config);
std::string canonical_json(const eval::ExperimentSpec& spec);

/// Documented defaults of every configuration file, for --explain-config.
std::string explain_config();

/// 16 hex digits of the FNV-1a hash of text.
std::string digest_hex(const std::string& text);
std::string hex64(std::uint64_t value);

struct Manifest
{
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string started;  // UTC, ISO 8601
  std::string finished;
  std::vector<std::string> outputs;
  std::string status = "ok";
  std::vector<std::pair<std::string, std::string>> extra;
};

std::string utc_now();
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Creates the directory if needed; InputError if that fails.
void ensure_directory(const std::filesystem::path& dir);

extern const char* const kToolVersion;

} // namespace nirt::io

#endif // NIRT_IO_HPP
