#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "evostore/evolution.hpp"
#include "evostore/harness.hpp"

using namespace evostore;

namespace {

LayoutGenome layout_of(std::vector<std::vector<PropertyId>> groups) {
  return canonicalize(LayoutGenome{std::move(groups)});
}

Candidate make_candidate(std::uint64_t id, LayoutGenome layout) {
  Candidate c;
  c.id = id;
  c.genome.layout = std::move(layout);
  return c;
}

// Population of distinct 7-property genomes with the given mean costs baked
// into one sample each.
Population population_with_costs(const std::vector<double>& costs) {
  Population pop;
  const auto layouts = enumerate_layouts(7);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    auto c = make_candidate(i, layouts[i * 7 + 3]);
    FitnessSample s;
    s.cost = costs[i];
    s.candidate_id = c.id;
    c.samples.push_back(s);
    pop.candidates.push_back(std::move(c));
  }
  return pop;
}

std::vector<std::uint64_t> parent_ids(const std::vector<Candidate>& parents) {
  std::vector<std::uint64_t> ids;
  for (const auto& p : parents) {
    ids.push_back(p.id);
  }
  return ids;
}

}  // namespace

TEST_CASE("assign_query is round-robin") {
  Population pop;
  for (std::uint64_t i = 0; i < 4; ++i) {
    pop.candidates.push_back(make_candidate(i, layout_of({{0}})));
  }
  for (std::uint64_t qi = 0; qi < 8; ++qi) {
    CHECK(assign_query(pop, qi) == qi % 4);
  }

  Population single;
  single.candidates.push_back(make_candidate(0, layout_of({{0}})));
  for (std::uint64_t qi = 0; qi < 5; ++qi) {
    CHECK(assign_query(single, qi) == 0);
  }
}

TEST_CASE("select_parents keeps the fittest half in rank order") {
  auto pop = population_with_costs({10, 20, 30, 40});
  const auto stats = compute_stats(pop);
  const auto parents = select_parents(std::move(pop), stats, 0.5);
  CHECK(parent_ids(parents) == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("select_parents ranks by cost then id") {
  auto pop = population_with_costs({40, 10, 30, 20});
  const auto stats = compute_stats(pop);
  const auto parents = select_parents(std::move(pop), stats, 0.5);
  CHECK(parent_ids(parents) == std::vector<std::uint64_t>{1, 3});
}

TEST_CASE("select_parents breaks ties by lower id") {
  auto pop = population_with_costs({7, 7, 7, 7});
  const auto stats = compute_stats(pop);
  const auto parents = select_parents(std::move(pop), stats, 0.5);
  CHECK(parent_ids(parents) == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("select_parents requires complete stats") {
  auto pop = population_with_costs({1, 2, 3, 4});
  pop.candidates[2].samples.clear();
  const auto stats = compute_stats(pop);
  CHECK_THROWS_WITH_AS(select_parents(std::move(pop), stats, 0.5),
                       doctest::Contains("missing stats"), std::runtime_error);
}

TEST_CASE("generate_population fills offspring slots round-robin") {
  Rng rng(3);
  std::uint64_t next_id = 100;

  SUBCASE("two parents, pop 4") {
    std::vector<Candidate> parents;
    parents.push_back(make_candidate(0, layout_of({{0, 1, 2, 3, 4, 5, 6}})));
    parents.push_back(make_candidate(1, layout_of({{0}, {1, 2, 3, 4, 5, 6}})));
    const auto next = generate_population(std::move(parents), 4, 0.0, rng, next_id, 1);
    REQUIRE(next.candidates.size() == 4);
    CHECK(next.generation == 1);
    CHECK(next.candidates[0].id == 0);
    CHECK(next.candidates[1].id == 1);
    CHECK(next.candidates[2].id == 100);
    CHECK(next.candidates[3].id == 101);
    CHECK(next.candidates[2].genome == next.candidates[0].genome);
    CHECK(next.candidates[3].genome == next.candidates[1].genome);
    CHECK(next.candidates[2].clone_source == 0);
    CHECK(next.candidates[3].clone_source == 1);
    CHECK(next.candidates[2].born_generation == 1);
  }

  SUBCASE("one parent, pop 4") {
    std::vector<Candidate> parents;
    parents.push_back(make_candidate(7, layout_of({{0}, {1}, {2}})));
    const auto next = generate_population(std::move(parents), 4, 0.0, rng, next_id, 2);
    REQUIRE(next.candidates.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) {
      CHECK(next.candidates[i].genome == next.candidates[0].genome);
      CHECK(next.candidates[i].clone_source == 7);
    }
  }

  SUBCASE("two parents, pop 5") {
    std::vector<Candidate> parents;
    parents.push_back(make_candidate(0, layout_of({{0, 1}, {2}})));
    parents.push_back(make_candidate(1, layout_of({{0}, {1, 2}})));
    const auto next = generate_population(std::move(parents), 5, 0.0, rng, next_id, 1);
    REQUIRE(next.candidates.size() == 5);
    CHECK(next.candidates[2].clone_source == 0);
    CHECK(next.candidates[3].clone_source == 1);
    CHECK(next.candidates[4].clone_source == 0);  // round-robin wraps
  }
}

TEST_CASE("generate_population can fill slots by crossover") {
  Rng rng(5);
  std::uint64_t next_id = 10;
  std::vector<Candidate> parents;
  parents.push_back(make_candidate(0, layout_of({{0, 1, 2, 3, 4, 5, 6}})));
  parents.push_back(make_candidate(1, layout_of({{0}, {1}, {2}, {3}, {4}, {5}, {6}})));
  const auto next = generate_population(std::move(parents), 4, 1.0, rng, next_id, 1);
  for (std::size_t i = 2; i < 4; ++i) {
    CHECK_FALSE(next.candidates[i].clone_source.has_value());
    CHECK_NOTHROW(validate_partition(next.candidates[i].genome.layout));
  }
}

TEST_CASE("mutate_offspring changes every offspring and no parent") {
  Rng rng(7);
  std::uint64_t next_id = 100;
  std::vector<Candidate> parents;
  parents.push_back(make_candidate(0, layout_of({{0, 1, 2, 3, 4, 5, 6}})));
  parents.push_back(make_candidate(1, layout_of({{0}, {1, 2, 3, 4, 5, 6}})));
  const auto genome0 = parents[0].genome;
  const auto genome1 = parents[1].genome;

  auto next = generate_population(std::move(parents), 4, 0.0, rng, next_id, 1);
  mutate_offspring(next, 2, MutationParams{0.7}, rng);

  CHECK(next.candidates[0].genome == genome0);
  CHECK(next.candidates[1].genome == genome1);
  CHECK(next.candidates[2].genome != genome0);
  CHECK(next.candidates[3].genome != genome1);
  CHECK_NOTHROW(validate_partition(next.candidates[2].genome.layout));
  CHECK_NOTHROW(validate_partition(next.candidates[3].genome.layout));
}

TEST_CASE("evolve keeps the population size and increments the generation") {
  Rng rng(11);
  std::uint64_t next_id = 4;
  auto pop = population_with_costs({10, 20, 30, 40});
  const auto stats = compute_stats(pop);
  const auto survivors = std::vector<std::uint64_t>{0, 1};
  const auto genome0 = pop.candidates[0].genome;

  EvolutionParams params;
  const auto next = evolve(std::move(pop), stats, params, rng, next_id);
  REQUIRE(next.candidates.size() == 4);
  CHECK(next.generation == 1);
  CHECK(next.candidates[0].id == survivors[0]);
  CHECK(next.candidates[1].id == survivors[1]);
  CHECK(next.candidates[0].genome == genome0);  // elitism
  for (const auto& c : next.candidates) {
    CHECK(c.samples.empty());  // windows cleared
  }
  CHECK(next.candidates[2].genome != next.candidates[0].genome);
  CHECK(next.candidates[3].genome != next.candidates[1].genome);
}

TEST_CASE("evolve with pop_size 1 keeps a single immortal candidate") {
  Rng rng(13);
  std::uint64_t next_id = 1;
  Population pop;
  pop.candidates.push_back(make_candidate(0, layout_of({{0, 1}, {2}})));
  pop.candidates[0].samples.push_back({5.0, {}, 0});
  const auto genome = pop.candidates[0].genome;
  EvolutionParams params;
  params.pop_size = 1;
  const auto stats = compute_stats(pop);
  const auto next = evolve(std::move(pop), stats, params, rng, next_id);
  REQUIRE(next.candidates.size() == 1);
  CHECK(next.candidates[0].id == 0);
  CHECK(next.candidates[0].genome == genome);
  CHECK(next.generation == 1);
}

TEST_CASE("best mean cost is non-increasing under stationary simulated fitness") {
  Rng rng(17);
  std::uint64_t next_id = 0;
  EvolutionParams params;
  Population pop = initial_population(7, params, rng, next_id);

  const Query query = make_query({0, 2}, 0.5);
  double previous_best = -1.0;
  for (int gen = 0; gen < 12; ++gen) {
    for (auto& c : pop.candidates) {
      for (int i = 0; i < 4; ++i) {
        FitnessSample s;
        s.cost = simulated_cost(query, c.genome.layout, c.genome.access, 1000);
        c.samples.push_back(s);
      }
    }
    const auto stats = compute_stats(pop);
    double best = stats.per_candidate[0].mean_cost;
    for (const auto& s : stats.per_candidate) {
      best = std::min(best, s.mean_cost);
    }
    if (previous_best >= 0.0) {
      CHECK(best <= previous_best);
    }
    previous_best = best;
    pop = evolve(std::move(pop), stats, params, rng, next_id);
  }
}

TEST_CASE("initial population starts from the key-value genome") {
  Rng rng(19);
  std::uint64_t next_id = 0;
  EvolutionParams params;
  const auto pop = initial_population(7, params, rng, next_id);
  REQUIRE(pop.candidates.size() == 4);
  CHECK(pop.generation == 0);
  CHECK(pop.candidates[0].genome.layout == layout_of({{0, 1, 2, 3, 4, 5, 6}}));
  CHECK(pop.candidates[0].genome.access == AccessGenes{});
  std::set<std::uint64_t> ids;
  for (const auto& c : pop.candidates) {
    ids.insert(c.id);
    CHECK_NOTHROW(validate_partition(c.genome.layout));
  }
  CHECK(ids.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(pop.candidates[i].genome != pop.candidates[0].genome);
  }
}

TEST_CASE("run validates its configuration up front") {
  RunParams params;
  WorkloadSpec spec = builtin_paper_workload(7, 1);

  params.evo.pop_size = 0;
  CHECK_THROWS_WITH_AS(run(params, spec), doctest::Contains("pop-size"),
                       std::invalid_argument);

  params = RunParams{};
  params.window = 41;  // not a multiple of pop_size
  CHECK_THROWS_WITH_AS(run(params, spec), doctest::Contains("window"), std::invalid_argument);

  params = RunParams{};
  params.evo.elim_frac = 1.0;
  CHECK_THROWS_WITH_AS(run(params, spec), doctest::Contains("elim-frac"),
                       std::invalid_argument);
}

TEST_CASE("run on an empty workload reports the initial population only") {
  RunParams params;
  params.props = 7;
  WorkloadSpec empty;
  const auto report = run(params, empty);
  CHECK(report.generations.empty());
  CHECK(report.total_queries == 0);
  REQUIRE(report.initial_genomes.size() == 4);
  CHECK(to_string(report.initial_genomes[0].layout) == "0,1,2,3,4,5,6");
}

TEST_CASE("run produces one snapshot per completed window with equal query counts") {
  RunParams params;
  params.rows = 1000;
  params.props = 7;
  params.seed = 21;
  params.window = 40;
  WorkloadSpec spec;
  spec.seed = 21;
  spec.phases.push_back({"stationary", {{{0, 1}, 0.5, 1.0}, {{2}, 0.1, 1.0}}, 200});
  const auto report = run(params, spec);
  REQUIRE(report.generations.size() == 5);
  for (const auto& snap : report.generations) {
    REQUIRE(snap.members.size() == 4);
    for (const auto& member : snap.members) {
      CHECK(member.query_count == 10);  // window / pop_size
    }
  }
  CHECK(report.total_queries == 200);
}

TEST_CASE("run truncates at max_generations and drops a trailing partial window") {
  RunParams params;
  params.rows = 1000;
  params.props = 3;
  params.window = 8;
  WorkloadSpec spec;
  spec.seed = 2;
  spec.phases.push_back({"p", {{{0}, 0.5, 1.0}}, 100});

  params.max_generations = 3;
  const auto capped = run(params, spec);
  CHECK(capped.generations.size() == 3);
  CHECK(capped.total_queries == 24);

  params.max_generations = 0;
  const auto full = run(params, spec);
  CHECK(full.generations.size() == 12);  // 100/8 completed windows
  CHECK(full.total_queries == 100);      // trailing 4 queries executed, not reported
}

TEST_CASE("run replays identically in simulated mode") {
  RunParams params;
  params.rows = 100000;
  params.props = 7;
  params.seed = 33;
  const auto spec = builtin_paper_workload(7, 33);

  const auto a = run(params, spec);
  const auto b = run(params, spec);
  REQUIRE(a.generations.size() == b.generations.size());
  for (std::size_t g = 0; g < a.generations.size(); ++g) {
    const auto& ga = a.generations[g];
    const auto& gb = b.generations[g];
    REQUIRE(ga.members.size() == gb.members.size());
    CHECK(ga.ranked == gb.ranked);
    for (std::size_t i = 0; i < ga.members.size(); ++i) {
      CHECK(ga.members[i].id == gb.members[i].id);
      CHECK(ga.members[i].genome == gb.members[i].genome);
      CHECK(ga.members[i].mean_cost == gb.members[i].mean_cost);
    }
  }
}

TEST_CASE("run responds to a phase change only after the boundary") {
  RunParams params;
  params.rows = 1'000'000;
  params.props = 7;
  params.seed = 44;
  params.window = 40;

  WorkloadSpec spec;
  spec.seed = 44;
  spec.phases.push_back({"wide", {{{0, 1, 2, 3, 4, 5, 6}, 0.5, 1.0}}, 800});
  spec.phases.push_back({"narrow", {{{2}, 0.1, 1.0}}, 1200});
  const auto report = run(params, spec);
  REQUIRE(report.generations.size() == 50);

  const std::uint64_t boundary_generation = 800 / params.window;
  const WorkloadPhase& narrow = spec.phases[1];
  const double oracle_min = oracle_rank_layouts(narrow, 7, params.rows).best_cost;

  std::optional<std::uint64_t> first_optimal;
  for (const auto& snap : report.generations) {
    const auto& best = snap.members[snap.ranked.front()];
    if (phase_cost(narrow, best.genome.layout, params.rows) == oracle_min) {
      first_optimal = snap.generation;
      break;
    }
  }
  REQUIRE(first_optimal.has_value());
  CHECK(*first_optimal >= boundary_generation);
}

TEST_CASE("measured-mode run reclaims eliminated layouts") {
  RunParams params;
  params.rows = 2000;
  params.props = 5;
  params.seed = 55;
  params.window = 8;
  params.fitness = FitnessMode::kMeasured;
  params.max_generations = 4;

  WorkloadSpec spec;
  spec.seed = 55;
  spec.phases.push_back({"p", {{{0, 2}, 0.3, 1.0}}, 64});

  const auto before = live_layout_bytes();
  const auto report = run(params, spec);
  CHECK(report.generations.size() == 4);
  CHECK(report.base_passes >= 1);
  // Every candidate's layout stores all P properties once; after the run all
  // handles went out of scope with the population.
  CHECK(live_layout_bytes() == before);
  for (const auto& snap : report.generations) {
    double mat = 0.0;
    for (const auto& member : snap.members) {
      mat += member.materialization_cost;
      CHECK(member.mean_cost > 0.0);  // wall-clock costs
    }
    CHECK(mat > 0.0);  // someone was materialized each generation
  }
}
