#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "evostore/exec.hpp"
#include "evostore/genome.hpp"
#include "evostore/storage.hpp"
#include "evostore/workload.hpp"

namespace evostore {

struct Candidate {
  std::uint64_t id = 0;
  Genome genome;
  std::shared_ptr<MaterializedLayout> layout;  // null in simulated-fitness runs
  std::vector<FitnessSample> samples;          // current evaluation window
  std::uint64_t born_generation = 0;
  std::optional<std::uint64_t> clone_source;   // parent id for cloned offspring
};

struct Population {
  std::vector<Candidate> candidates;
  std::uint64_t generation = 0;
};

struct CandidateStats {
  std::uint64_t candidate_id = 0;
  std::uint64_t query_count = 0;
  double total_cost = 0.0;
  double mean_cost = 0.0;  // defined only when query_count > 0
};

// Aligned with population order.
struct PerfStats {
  std::vector<CandidateStats> per_candidate;
};

struct EvolutionParams {
  std::size_t pop_size = 4;
  double elim_frac = 0.5;
  double p_layout = 0.7;
  double p_crossover = 0.0;
};

// Round-robin candidate choice: candidates[query_index mod pop_size].
std::size_t assign_query(const Population& pop, std::uint64_t query_index);

PerfStats compute_stats(const Population& pop);

// Ranks by mean cost ascending (ties broken by lower id) and keeps the top
// ceil((1 - elim_frac) * pop_size) as parents, in rank order. Eliminated
// candidates' layouts are dropped. Throws if any candidate has no samples.
std::vector<Candidate> select_parents(Population&& current_gen, const PerfStats& stats,
                                      double elim_frac);

// Parents carry over unchanged (elitism) followed by offspring slots filled
// by cloning parents round-robin in rank order; with probability p_crossover
// an offspring slot is instead a crossover of two distinct parents. Offspring
// get fresh ids and born_generation = new_generation.
Population generate_population(std::vector<Candidate> parents, std::size_t pop_size,
                               double p_crossover, Rng& rng, std::uint64_t& next_id,
                               std::uint64_t new_generation);

// Replaces every offspring genome (members from offspring_begin on) with a
// mutation of itself; parents are untouched.
void mutate_offspring(Population& next_gen, std::size_t offspring_begin,
                      const MutationParams& params, Rng& rng);

// Algorithm-1 step: select parents, refill the population, mutate offspring.
// Increments the generation counter and clears all fitness windows.
Population evolve(Population&& current_gen, const PerfStats& stats, const EvolutionParams& params,
                  Rng& rng, std::uint64_t& next_id);

// Candidate 0 carries the data's birth format (one group holding every
// property, branching/full access); the rest are mutations of it.
Population initial_population(std::uint32_t n_props, const EvolutionParams& params, Rng& rng,
                              std::uint64_t& next_id);

enum class FitnessMode { kSimulated, kMeasured };

struct RunParams {
  std::uint64_t rows = 1'000'000;
  std::uint32_t props = 7;
  std::uint64_t seed = 1;
  EvolutionParams evo;
  std::uint64_t window = 40;           // queries per evaluation window
  std::uint64_t max_generations = 0;   // 0 = run until the stream ends
  FitnessMode fitness = FitnessMode::kSimulated;
  std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes;
};

void validate_run_params(const RunParams& params);

struct CandidateSnapshot {
  std::uint64_t id = 0;
  Genome genome;
  std::uint64_t born_generation = 0;
  std::optional<std::uint64_t> clone_source;
  std::uint64_t query_count = 0;
  double mean_cost = 0.0;
  double materialization_cost = 0.0;  // ns (measured) or bytes written (simulated)
};

struct GenerationSnapshot {
  std::uint64_t generation = 0;
  std::vector<CandidateSnapshot> members;  // population order
  std::vector<std::size_t> ranked;         // indices into members, fittest first
};

struct RunReport {
  std::vector<GenerationSnapshot> generations;
  std::vector<Genome> initial_genomes;
  std::uint64_t total_queries = 0;
  std::uint64_t base_passes = 0;  // materialization passes (measured mode)
};

// Interleaves assign/execute/record over windows of `window` queries, calling
// evolve at each window boundary. One generation snapshot per completed
// window; a trailing partial window is not reported.
RunReport run(const RunParams& params, const WorkloadSpec& workload);

}  // namespace evostore
