#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evostore/exec.hpp"
#include "evostore/genome.hpp"

namespace evostore {

struct QueryTemplate {
  std::vector<PropertyId> accessed_props;
  double selectivity = 0.0;
  double weight = 1.0;
};

struct WorkloadPhase {
  std::string name;
  std::vector<QueryTemplate> templates;
  std::uint64_t n_queries = 0;
};

struct WorkloadSpec {
  std::vector<WorkloadPhase> phases;
  std::uint64_t seed = 0;
};

// Line-oriented workload format ('#' starts a comment):
//   phase <name> queries=<int>
//     template props=<id,id,...> sel=<float> weight=<float>
// Each phase line is followed by one or more template lines. weight is
// optional and defaults to 1.
WorkloadSpec parse_workload(const std::filesystem::path& path);

void validate_workload(const WorkloadSpec& spec, std::uint32_t n_props);

// Instantiates a template: filter_prop = minimum accessed id, threshold from
// the selectivity.
Query query_from_template(const QueryTemplate& tmpl);

// Emits n_queries per phase in phase order; each query's template is drawn by
// weight from the seeded stream. Deterministic per spec.seed.
std::vector<Query> generate_stream(const WorkloadSpec& spec, std::uint32_t n_props);

// Cumulative query offsets at which each phase starts (phase i spans
// [offset[i], offset[i+1])); the final entry is the total query count.
std::vector<std::uint64_t> phase_offsets(const WorkloadSpec& spec);

// The four-phase workload shape used throughout: phase 1 touches all
// properties, later phases touch fixed proper subsets at mixed selectivities.
// Subsets are fixed per P so results are reproducible.
WorkloadSpec builtin_paper_workload(std::uint32_t n_props, std::uint64_t seed);

}  // namespace evostore
