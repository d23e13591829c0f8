#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kkindex/assembly.hpp"
#include "kkindex/config.hpp"

namespace kkindex {

inline constexpr const char* csv_schema_header = "# kk-index-lab v1";

enum class CheckKind { at_most, at_least, equals };

struct ReportRow {
  std::string quantity;
  std::string truncation;
  double measured = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  CheckKind kind = CheckKind::equals;

  // at_most: reference - measured; at_least: measured - reference; equals: -|measured - reference|
  double margin() const;
  bool pass() const { return margin() >= -tolerance; }
};

struct ReportFile {
  std::string name;     // file name inside the output directory
  std::string content;  // CSV body without the schema header
};

struct ExperimentReport {
  std::string name;
  std::vector<ReportRow> rows;
  std::vector<ReportFile> files;

  std::size_t failures() const;
  bool passed() const { return failures() == 0; }
};

class UnknownExperiment : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& experiment_registry();
bool is_registered(const std::string& name);

// Throws UnknownExperiment; component failures are rethrown with the experiment name.
ExperimentReport run_experiment(const std::string& name, const Config& cfg);

std::string format_number(double v);
std::string format_csv(const ExperimentReport& report);
std::string format_summary(const std::vector<ExperimentReport>& reports, const Config& cfg);
// Writes <name>.csv, any extra files and summary.txt.
void write_reports(const std::vector<ExperimentReport>& reports, const Config& cfg, const std::filesystem::path& dir);

// Building blocks shared by the experiments and the acceptance checks.

struct CcrCarResult {
  double boson_ccr = 0.0;        // [raise_n, lower_m] = delta, raises and lowers commute; safe columns
  double dual_ccr = 0.0;         // [lower_n, raise_m] = -delta on the dual side; safe columns
  double car_safe = 0.0;         // {gamma(z_n), gamma(zbar_m)} = -2 delta; safe columns
  double car_full = 0.0;         // all CAR on the exterior algebra closed under wedging
  double energy_identity = 0.0;  // energy = -i sum_n n raise_n lower_n, both boson kinds
  double number_identity = 0.0;  // N = -1/2 sum_n n gamma(zbar_n) gamma(z_n)
};

CcrCarResult ccr_car_suite(const TruncationSpec& spec);

struct KernelResult {
  std::size_t dimension = 0;
  std::size_t predicted = 0;  // weighted partition count of the boson leg
  double off_vacuum = 0.0;    // largest coefficient outside boson (x) vacuum (x) 1_f
};

KernelResult kernel_suite(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::joint);

struct FinGroupResult {
  std::string name;
  std::size_t cocycle_violations = 0;
  double extension_associativity = 0.0;
  double level_orthogonality = 0.0;  // largest product of different-level parts
  double level_completeness = 0.0;   // sum of level parts minus the element
  double schatten_multiplicativity = 0.0;
  double schatten_star = 0.0;
  double mishchenko_idempotent = 0.0;
  double mishchenko_rank_one = 0.0;  // image against |sqrt c><sqrt c|
  std::vector<int> blocks;
  std::size_t center_dimension = 0;
  std::size_t commuting_elements = 0;  // g with tau(g, h) = tau(h, g) for all h
};

FinGroupResult fingroup_suite(const Cocycle& tau, SeededRng& rng);

struct MIsoResult {
  int trials = 0;
  double isometry = 0.0;
  double right_module = 0.0;
  double left_module = 0.0;
  bool levels_ok = true;
};

MIsoResult m_iso_trials(const Cocycle& tau, int trials, SeededRng& rng);

// Named group models used by the finite-group experiments.
struct GroupCase {
  std::string group;
  std::string cocycle;
};

const std::vector<GroupCase>& standard_group_cases();
Cocycle make_group_cocycle(const GroupCase& c, int root_order = 0);

}  // namespace kkindex
