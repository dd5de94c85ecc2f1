#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evostore/evolution.hpp"
#include "evostore/workload.hpp"

namespace evostore {

// One CSV row of the ranked-candidates-per-generation view.
struct GenerationRecord {
  std::uint64_t generation = 0;
  std::uint64_t candidate_id = 0;
  std::string rank;  // A = fittest, B, C, ...
  std::string genome;
  double mean_cost = 0.0;
  std::uint64_t query_count = 0;
  double materialization_cost = 0.0;
  bool best_flag = false;
};

inline constexpr const char* kCsvHeader =
    "generation,candidate_id,rank,genome,mean_cost,query_count,materialization_cost,best_flag";

std::string rank_letter(std::size_t rank_index);

std::vector<GenerationRecord> to_records(const RunReport& report);

void write_csv(const std::vector<GenerationRecord>& records, std::ostream& out);

// Exact model cost of a phase for one layout: weight-normalized sum of the
// per-template simulated cost. The quantity the oracle minimizes and the
// convergence checks compare against.
double phase_cost(const WorkloadPhase& phase, const LayoutGenome& layout, std::uint64_t rows);

struct OracleEntry {
  LayoutGenome layout;
  double cost = 0.0;
};

struct OracleReport {
  std::vector<OracleEntry> ranked;  // cost ascending, enumeration order on ties
  double best_cost = 0.0;
  std::size_t tie_count = 0;  // layouts achieving best_cost
};

// Brute force over every set partition of the P properties (B(P) layouts).
OracleReport oracle_rank_layouts(const WorkloadPhase& phase, std::uint32_t n_props,
                                 std::uint64_t rows);

// Measured variant: each layout is materialized, timed on `samples` queries
// drawn from the phase (the same queries for every layout), and dropped.
OracleReport oracle_rank_layouts_measured(const WorkloadPhase& phase, const BaseTable& base,
                                          std::size_t samples, std::uint64_t seed);

// CLI-facing configuration. workload is "builtin" or a workload file path.
struct CliRunConfig {
  RunParams params;
  std::string workload = "builtin";
  std::uint64_t generations = 0;  // 0 = run the stream as given
  std::filesystem::path out_csv;
};

struct CliOracleConfig {
  std::uint32_t props = 7;
  std::uint64_t rows = 1'000'000;
  std::uint64_t seed = 1;
  std::string workload = "builtin";
  std::size_t phase_index = 1;  // 1-based
  FitnessMode fitness = FitnessMode::kSimulated;
  std::size_t samples = 5;
  std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes;
  std::filesystem::path out_csv;
};

struct CliGenDataConfig {
  std::uint64_t rows = 0;
  std::uint32_t props = 0;
  std::uint64_t seed = 1;
  std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes;
  std::filesystem::path out_csv;
};

// Loads "builtin" or a workload file; when min_generations > 0, the final
// phase is extended so the stream covers at least that many windows.
WorkloadSpec resolve_workload(const std::string& workload, std::uint32_t n_props,
                              std::uint64_t seed, std::uint64_t min_generations,
                              std::uint64_t window);

// Subcommand bodies. Exit codes: 0 success, 2 config error, 1 runtime error.
int cli_run(const CliRunConfig& config, std::ostream& log);
int cli_oracle(const CliOracleConfig& config, std::ostream& log);
int cli_gen_data(const CliGenDataConfig& config, std::ostream& log);

}  // namespace evostore
