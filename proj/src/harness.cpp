#include "evostore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace evostore {

namespace {

constexpr std::uint64_t kOracleStreamTag = 3;

// Integral costs print without decimals; fractional ones keep three.
std::string format_cost(double cost) {
  if (std::floor(cost) == cost && std::abs(cost) < 1e15) {
    return std::to_string(static_cast<long long>(cost));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", cost);
  return buf;
}

}  // namespace

std::string rank_letter(std::size_t rank_index) {
  // A, B, ..., Z, AA, AB, ... (spreadsheet column style)
  std::string out;
  std::size_t n = rank_index;
  for (;;) {
    out.insert(out.begin(), static_cast<char>('A' + n % 26));
    if (n < 26) {
      break;
    }
    n = n / 26 - 1;
  }
  return out;
}

std::vector<GenerationRecord> to_records(const RunReport& report) {
  std::vector<GenerationRecord> records;
  for (const auto& snap : report.generations) {
    for (std::size_t r = 0; r < snap.ranked.size(); ++r) {
      const auto& member = snap.members[snap.ranked[r]];
      GenerationRecord rec;
      rec.generation = snap.generation;
      rec.candidate_id = member.id;
      rec.rank = rank_letter(r);
      rec.genome = to_string(member.genome);
      rec.mean_cost = member.mean_cost;
      rec.query_count = member.query_count;
      rec.materialization_cost = member.materialization_cost;
      rec.best_flag = r == 0;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_csv(const std::vector<GenerationRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& rec : records) {
    out << rec.generation << ',' << rec.candidate_id << ',' << rec.rank << ',' << rec.genome
        << ',' << format_cost(rec.mean_cost) << ',' << rec.query_count << ','
        << format_cost(rec.materialization_cost) << ',' << (rec.best_flag ? 1 : 0) << '\n';
  }
}

double phase_cost(const WorkloadPhase& phase, const LayoutGenome& layout, std::uint64_t rows) {
  if (phase.templates.empty()) {
    throw std::invalid_argument("phase_cost: phase has no templates");
  }
  double total_weight = 0.0;
  for (const auto& tmpl : phase.templates) {
    total_weight += tmpl.weight;
  }
  double cost = 0.0;
  for (const auto& tmpl : phase.templates) {
    cost += (tmpl.weight / total_weight) *
            simulated_cost(query_from_template(tmpl), layout, AccessGenes{}, rows);
  }
  return cost;
}

namespace {

OracleReport rank_entries(std::vector<OracleEntry> entries) {
  OracleReport report;
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].cost < entries[b].cost;
  });
  for (const std::size_t i : order) {
    report.ranked.push_back(std::move(entries[i]));
  }
  report.best_cost = report.ranked.front().cost;
  report.tie_count = static_cast<std::size_t>(
      std::count_if(report.ranked.begin(), report.ranked.end(),
                    [&](const OracleEntry& e) { return e.cost == report.best_cost; }));
  return report;
}

}  // namespace

OracleReport oracle_rank_layouts(const WorkloadPhase& phase, std::uint32_t n_props,
                                 std::uint64_t rows) {
  std::vector<OracleEntry> entries;
  for (auto& layout : enumerate_layouts(n_props)) {
    const double cost = phase_cost(phase, layout, rows);
    entries.push_back({std::move(layout), cost});
  }
  return rank_entries(std::move(entries));
}

OracleReport oracle_rank_layouts_measured(const WorkloadPhase& phase, const BaseTable& base,
                                          std::size_t samples, std::uint64_t seed) {
  if (samples < 1) {
    throw std::invalid_argument("oracle: samples must be >= 1");
  }
  // One fixed query sample, shared by every layout.
  WorkloadSpec one_phase;
  one_phase.seed = Rng::sub(seed, kOracleStreamTag).next_u64();
  one_phase.phases.push_back(phase);
  one_phase.phases.back().n_queries = samples;
  const auto queries = generate_stream(one_phase, base.n_props());

  std::vector<OracleEntry> entries;
  for (auto& layout : enumerate_layouts(base.n_props())) {
    MaterializedLayout materialized = materialize(base, layout);
    double total_ns = 0.0;
    for (const auto& query : queries) {
      total_ns += execute_timed(query, materialized, AccessGenes{}).cost_ns;
    }
    materialized.drop();
    entries.push_back({std::move(layout), total_ns / static_cast<double>(queries.size())});
  }
  return rank_entries(std::move(entries));
}

WorkloadSpec resolve_workload(const std::string& workload, std::uint32_t n_props,
                              std::uint64_t seed, std::uint64_t min_generations,
                              std::uint64_t window) {
  WorkloadSpec spec =
      workload == "builtin" ? builtin_paper_workload(n_props, seed) : parse_workload(workload);
  spec.seed = seed;
  if (min_generations > 0) {
    const std::uint64_t needed = min_generations * window;
    const auto offsets = phase_offsets(spec);
    const std::uint64_t total = offsets.back();
    if (total < needed) {
      spec.phases.back().n_queries += needed - total;  // stationary tail
    }
  }
  return spec;
}

int cli_run(const CliRunConfig& config, std::ostream& log) {
  RunParams params = config.params;
  params.max_generations = config.generations;
  validate_run_params(params);

  const WorkloadSpec spec = resolve_workload(config.workload, params.props, params.seed,
                                             config.generations, params.window);
  const RunReport report = run(params, spec);
  const auto records = to_records(report);

  std::ofstream out(config.out_csv);
  if (!out) {
    throw std::runtime_error("cannot open output file '" + config.out_csv.string() + "'");
  }
  write_csv(records, out);

  log << "initial population:\n";
  for (const auto& genome : report.initial_genomes) {
    log << "  " << to_string(genome) << '\n';
  }
  log << "queries executed: " << report.total_queries << '\n';
  log << "generations: " << report.generations.size() << '\n';
  if (!report.generations.empty()) {
    const auto& last = report.generations.back();
    const auto& best = last.members[last.ranked.front()];
    log << "final best genome: " << to_string(best.genome) << '\n';
    log << "final best mean cost: " << format_cost(best.mean_cost) << '\n';
  }
  log << "wrote " << records.size() << " records to " << config.out_csv.string() << '\n';
  return 0;
}

int cli_oracle(const CliOracleConfig& config, std::ostream& log) {
  if (config.props > 10) {
    throw std::invalid_argument("props must be <= 10 for the oracle (Bell-number blowup)");
  }
  WorkloadSpec spec = resolve_workload(config.workload, config.props, config.seed, 0, 1);
  validate_workload(spec, config.props);
  if (config.phase_index < 1 || config.phase_index > spec.phases.size()) {
    throw std::invalid_argument("phase must be in [1, " + std::to_string(spec.phases.size()) +
                                "]");
  }
  const WorkloadPhase& phase = spec.phases[config.phase_index - 1];

  OracleReport report;
  if (config.fitness == FitnessMode::kSimulated) {
    report = oracle_rank_layouts(phase, config.props, config.rows);
  } else {
    const BaseTable base =
        BaseTable::generate(config.rows, config.props, config.seed, config.memory_budget_bytes);
    report = oracle_rank_layouts_measured(phase, base, config.samples, config.seed);
  }

  if (!config.out_csv.empty()) {
    std::ofstream out(config.out_csv);
    if (!out) {
      throw std::runtime_error("cannot open output file '" + config.out_csv.string() + "'");
    }
    out << "rank,genome,cost\n";
    for (std::size_t i = 0; i < report.ranked.size(); ++i) {
      Genome full{report.ranked[i].layout, AccessGenes{}};
      out << (i + 1) << ',' << to_string(full) << ',' << format_cost(report.ranked[i].cost)
          << '\n';
    }
  }

  log << "phase: " << phase.name << '\n';
  log << "layouts evaluated: " << report.ranked.size() << '\n';
  log << "best cost: " << format_cost(report.best_cost) << '\n';
  log << "ties at best: " << report.tie_count << '\n';
  const std::size_t shown = std::min<std::size_t>(report.tie_count, 10);
  for (std::size_t i = 0; i < shown; ++i) {
    log << "best genome: " << to_string(Genome{report.ranked[i].layout, AccessGenes{}}) << '\n';
  }
  if (shown < report.tie_count) {
    log << "... " << (report.tie_count - shown) << " more tied layouts (see CSV)\n";
  }
  return 0;
}

int cli_gen_data(const CliGenDataConfig& config, std::ostream& log) {
  if (config.rows < 1) {
    throw std::invalid_argument("rows must be >= 1");
  }
  if (config.props < 1) {
    throw std::invalid_argument("props must be >= 1");
  }
  const BaseTable base =
      BaseTable::generate(config.rows, config.props, config.seed, config.memory_budget_bytes);
  std::ofstream out(config.out_csv);
  if (!out) {
    throw std::runtime_error("cannot open output file '" + config.out_csv.string() + "'");
  }
  for (std::uint64_t r = 0; r < base.n_rows(); ++r) {
    for (std::uint32_t p = 0; p < base.n_props(); ++p) {
      if (p > 0) {
        out << ',';
      }
      out << base.value(r, p);
    }
    out << '\n';
  }
  log << "wrote " << base.n_rows() << " rows x " << base.n_props() << " props to "
      << config.out_csv.string() << '\n';
  return 0;
}

}  // namespace evostore
