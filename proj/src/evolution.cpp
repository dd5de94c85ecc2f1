#include "evostore/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evostore {

namespace {

constexpr std::uint64_t kEvolutionStreamTag = 2;

std::size_t survivor_count(std::size_t pop_size, double elim_frac) {
  const auto keep = static_cast<std::size_t>(
      std::ceil((1.0 - elim_frac) * static_cast<double>(pop_size)));
  return std::clamp<std::size_t>(keep, 1, pop_size);
}

LayoutGenome key_value_layout(std::uint32_t n_props) {
  LayoutGenome layout;
  layout.groups.emplace_back();
  for (PropertyId p = 0; p < n_props; ++p) {
    layout.groups.back().push_back(p);
  }
  return layout;
}

}  // namespace

std::size_t assign_query(const Population& pop, std::uint64_t query_index) {
  if (pop.candidates.empty()) {
    throw std::invalid_argument("assign_query: empty population");
  }
  return static_cast<std::size_t>(query_index % pop.candidates.size());
}

PerfStats compute_stats(const Population& pop) {
  PerfStats stats;
  for (const auto& c : pop.candidates) {
    CandidateStats s;
    s.candidate_id = c.id;
    s.query_count = c.samples.size();
    for (const auto& sample : c.samples) {
      s.total_cost += sample.cost;
    }
    s.mean_cost = s.query_count > 0 ? s.total_cost / static_cast<double>(s.query_count) : 0.0;
    stats.per_candidate.push_back(s);
  }
  return stats;
}

std::vector<Candidate> select_parents(Population&& current_gen, const PerfStats& stats,
                                      double elim_frac) {
  const std::size_t n = current_gen.candidates.size();
  if (stats.per_candidate.size() != n) {
    throw std::invalid_argument("select_parents: stats do not match the population");
  }
  for (const auto& s : stats.per_candidate) {
    if (s.query_count == 0) {
      throw std::runtime_error("missing stats: candidate " + std::to_string(s.candidate_id) +
                               " has no samples");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = stats.per_candidate[a];
    const auto& sb = stats.per_candidate[b];
    if (sa.mean_cost != sb.mean_cost) {
      return sa.mean_cost < sb.mean_cost;
    }
    return sa.candidate_id < sb.candidate_id;
  });

  const std::size_t keep = survivor_count(n, elim_frac);
  std::vector<Candidate> parents;
  parents.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    parents.push_back(std::move(current_gen.candidates[order[r]]));
  }
  for (std::size_t r = keep; r < n; ++r) {
    auto& eliminated = current_gen.candidates[order[r]];
    if (eliminated.layout) {
      eliminated.layout->drop();
    }
  }
  return parents;
}

Population generate_population(std::vector<Candidate> parents, std::size_t pop_size,
                               double p_crossover, Rng& rng, std::uint64_t& next_id,
                               std::uint64_t new_generation) {
  if (parents.empty() || parents.size() > pop_size) {
    throw std::invalid_argument("generate_population: need 1 <= |parents| <= pop_size");
  }
  Population next;
  next.generation = new_generation;
  const std::size_t n_parents = parents.size();
  for (auto& p : parents) {
    p.clone_source.reset();
    next.candidates.push_back(std::move(p));
  }
  for (std::size_t slot = 0; slot + n_parents < pop_size; ++slot) {
    Candidate child;
    child.id = next_id++;
    child.born_generation = new_generation;
    if (n_parents >= 2 && rng.chance(p_crossover)) {
      const std::size_t a = static_cast<std::size_t>(rng.below(n_parents));
      std::size_t b = static_cast<std::size_t>(rng.below(n_parents - 1));
      if (b >= a) {
        ++b;
      }
      child.genome = crossover(next.candidates[a].genome, next.candidates[b].genome, rng);
    } else {
      const auto& source = next.candidates[slot % n_parents];
      child.genome = source.genome;
      child.clone_source = source.id;
    }
    next.candidates.push_back(std::move(child));
  }
  return next;
}

void mutate_offspring(Population& next_gen, std::size_t offspring_begin,
                      const MutationParams& params, Rng& rng) {
  for (std::size_t i = offspring_begin; i < next_gen.candidates.size(); ++i) {
    auto& child = next_gen.candidates[i];
    child.genome = mutate(child.genome, rng, params);
    child.layout.reset();  // stale format; rematerialized by the run loop
  }
}

Population evolve(Population&& current_gen, const PerfStats& stats, const EvolutionParams& params,
                  Rng& rng, std::uint64_t& next_id) {
  const std::uint64_t new_generation = current_gen.generation + 1;
  auto parents = select_parents(std::move(current_gen), stats, params.elim_frac);
  const std::size_t n_parents = parents.size();
  Population next = generate_population(std::move(parents), params.pop_size, params.p_crossover,
                                        rng, next_id, new_generation);
  mutate_offspring(next, n_parents, MutationParams{params.p_layout}, rng);
  for (auto& c : next.candidates) {
    c.samples.clear();
  }
  return next;
}

Population initial_population(std::uint32_t n_props, const EvolutionParams& params, Rng& rng,
                              std::uint64_t& next_id) {
  Population pop;
  Candidate kv;
  kv.id = next_id++;
  kv.genome.layout = key_value_layout(n_props);
  pop.candidates.push_back(std::move(kv));
  for (std::size_t i = 1; i < params.pop_size; ++i) {
    Candidate c;
    c.id = next_id++;
    c.genome = mutate(pop.candidates[0].genome, rng, MutationParams{params.p_layout});
    c.clone_source = pop.candidates[0].id;
    pop.candidates.push_back(std::move(c));
  }
  return pop;
}

void validate_run_params(const RunParams& params) {
  if (params.evo.pop_size < 1) {
    throw std::invalid_argument("pop-size must be >= 1");
  }
  if (!(params.evo.elim_frac > 0.0) || !(params.evo.elim_frac < 1.0)) {
    throw std::invalid_argument("elim-frac must be in (0, 1)");
  }
  if (params.window < 1 || params.window % params.evo.pop_size != 0) {
    throw std::invalid_argument("window must be a positive multiple of pop-size");
  }
  if (params.evo.p_layout < 0.0 || params.evo.p_layout > 1.0) {
    throw std::invalid_argument("p-layout must be in [0, 1]");
  }
  if (params.evo.p_crossover < 0.0 || params.evo.p_crossover > 1.0) {
    throw std::invalid_argument("p-crossover must be in [0, 1]");
  }
  if (params.rows < 1) {
    throw std::invalid_argument("rows must be >= 1");
  }
  if (params.props < 1) {
    throw std::invalid_argument("props must be >= 1");
  }
}

namespace {

struct MaterializationLedger {
  // Pending per-candidate cost, consumed when the generation is snapshotted.
  std::vector<std::pair<std::uint64_t, double>> pending;

  void charge(std::uint64_t candidate_id, double cost) { pending.push_back({candidate_id, cost}); }

  double take(std::uint64_t candidate_id) {
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      if (it->first == candidate_id) {
        const double cost = it->second;
        pending.erase(it);
        return cost;
      }
    }
    return 0.0;
  }
};

// Materializes every candidate lacking a live layout in one shared base pass
// and charges each an equal share of the wall time.
void materialize_missing(const BaseTable& base, Population& pop, MaterializationLedger& ledger,
                         RunReport& report) {
  std::vector<std::size_t> missing;
  std::vector<LayoutGenome> layouts;
  for (std::size_t i = 0; i < pop.candidates.size(); ++i) {
    if (!pop.candidates[i].layout || pop.candidates[i].layout->dropped()) {
      missing.push_back(i);
      layouts.push_back(pop.candidates[i].genome.layout);
    }
  }
  if (missing.empty()) {
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto [materialized, accounting] = materialize_many(base, layouts);
  const auto t1 = std::chrono::steady_clock::now();
  const double total_ns =
      static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  report.base_passes += accounting.base_passes;
  const double share = total_ns / static_cast<double>(missing.size());
  for (std::size_t k = 0; k < missing.size(); ++k) {
    auto& candidate = pop.candidates[missing[k]];
    candidate.layout = std::make_shared<MaterializedLayout>(std::move(materialized[k]));
    ledger.charge(candidate.id, share);
  }
}

// Simulated runs skip physical materialization; the model charges the bytes
// a single-pass rewrite of the full payload would produce.
void charge_model_materialization(const RunParams& params, Population& pop,
                                  MaterializationLedger& ledger) {
  const double bytes = static_cast<double>(params.rows) * params.props * 8.0;
  for (auto& candidate : pop.candidates) {
    if (candidate.born_generation == pop.generation) {
      ledger.charge(candidate.id, bytes);
    }
  }
}

GenerationSnapshot snapshot_generation(const Population& pop, const PerfStats& stats,
                                       MaterializationLedger& ledger) {
  GenerationSnapshot snap;
  snap.generation = pop.generation;
  for (std::size_t i = 0; i < pop.candidates.size(); ++i) {
    const auto& c = pop.candidates[i];
    CandidateSnapshot cs;
    cs.id = c.id;
    cs.genome = c.genome;
    cs.born_generation = c.born_generation;
    cs.clone_source = c.clone_source;
    cs.query_count = stats.per_candidate[i].query_count;
    cs.mean_cost = stats.per_candidate[i].mean_cost;
    cs.materialization_cost = ledger.take(c.id);
    snap.members.push_back(std::move(cs));
  }
  snap.ranked.resize(pop.candidates.size());
  std::iota(snap.ranked.begin(), snap.ranked.end(), 0);
  std::sort(snap.ranked.begin(), snap.ranked.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = stats.per_candidate[a];
    const auto& sb = stats.per_candidate[b];
    if (sa.mean_cost != sb.mean_cost) {
      return sa.mean_cost < sb.mean_cost;
    }
    return sa.candidate_id < sb.candidate_id;
  });
  return snap;
}

}  // namespace

RunReport run(const RunParams& params, const WorkloadSpec& workload) {
  validate_run_params(params);
  // A zero-phase spec is the empty workload: no queries, no generations.
  const auto queries =
      workload.phases.empty() ? std::vector<Query>{} : generate_stream(workload, params.props);
  Rng rng = Rng::sub(params.seed, kEvolutionStreamTag);
  std::uint64_t next_id = 0;

  Population pop = initial_population(params.props, params.evo, rng, next_id);
  RunReport report;
  for (const auto& c : pop.candidates) {
    report.initial_genomes.push_back(c.genome);
  }

  const bool measured = params.fitness == FitnessMode::kMeasured;
  std::optional<BaseTable> base;
  MaterializationLedger ledger;
  if (measured) {
    base.emplace(
        BaseTable::generate(params.rows, params.props, params.seed, params.memory_budget_bytes));
    materialize_missing(*base, pop, ledger, report);
  } else {
    charge_model_materialization(params, pop, ledger);
  }

  std::uint64_t completed_generations = 0;
  for (std::uint64_t qi = 0; qi < queries.size(); ++qi) {
    const Query& query = queries[qi];
    auto& candidate = pop.candidates[assign_query(pop, qi)];

    FitnessSample sample;
    sample.query = query;
    sample.candidate_id = candidate.id;
    if (measured) {
      sample.cost = execute_timed(query, *candidate.layout, candidate.genome.access).cost_ns;
    } else {
      sample.cost =
          simulated_cost(query, candidate.genome.layout, candidate.genome.access, params.rows);
    }
    candidate.samples.push_back(std::move(sample));
    ++report.total_queries;

    if ((qi + 1) % params.window == 0) {
      const PerfStats stats = compute_stats(pop);
      report.generations.push_back(snapshot_generation(pop, stats, ledger));
      ++completed_generations;
      if (params.max_generations != 0 && completed_generations >= params.max_generations) {
        break;
      }
      if (qi + 1 == queries.size()) {
        break;  // stream over; nothing left to evolve for
      }
      pop = evolve(std::move(pop), stats, params.evo, rng, next_id);
      if (measured) {
        materialize_missing(*base, pop, ledger, report);
      } else {
        charge_model_materialization(params, pop, ledger);
      }
    }
  }
  return report;
}

}  // namespace evostore
