#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evostore/harness.hpp"

namespace {

evostore::FitnessMode parse_fitness(const std::string& text) {
  if (text == "simulated") {
    return evostore::FitnessMode::kSimulated;
  }
  if (text == "measured") {
    return evostore::FitnessMode::kMeasured;
  }
  throw std::invalid_argument("--fitness must be 'simulated' or 'measured'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evostore: storage engine whose layout evolves to fit the query workload"};
  app.require_subcommand(1);

  evostore::CliRunConfig run_config;
  std::string run_fitness = "simulated";
  auto* run_cmd = app.add_subcommand("run", "evolve a population against a workload");
  run_cmd->add_option("--rows", run_config.params.rows, "table rows");
  run_cmd->add_option("--props", run_config.params.props, "properties per record");
  run_cmd->add_option("--seed", run_config.params.seed, "master seed for all randomness");
  run_cmd->add_option("--pop-size", run_config.params.evo.pop_size, "candidates per generation");
  run_cmd->add_option("--elim-frac", run_config.params.evo.elim_frac,
                      "fraction eliminated each generation");
  run_cmd->add_option("--window", run_config.params.window, "queries per evaluation window");
  run_cmd->add_option("--generations", run_config.generations,
                      "cap on generations (0 = run the whole stream); the final phase is "
                      "extended if the stream is shorter");
  run_cmd->add_option("--fitness", run_fitness, "simulated|measured");
  run_cmd->add_option("--workload", run_config.workload, "builtin or a workload file path");
  run_cmd->add_option("--p-layout", run_config.params.evo.p_layout,
                      "probability a mutation edits the layout (vs access genes)");
  run_cmd->add_option("--p-crossover", run_config.params.evo.p_crossover,
                      "probability an offspring slot is filled by crossover");
  run_cmd->add_option("--memory-budget-bytes", run_config.params.memory_budget_bytes,
                      "cap on base table size");
  run_cmd->add_option("--out", run_config.out_csv, "output CSV path")->required();

  evostore::CliOracleConfig oracle_config;
  std::string oracle_fitness = "simulated";
  auto* oracle_cmd =
      app.add_subcommand("oracle", "brute-force the optimal layout for a workload phase");
  oracle_cmd->add_option("--props", oracle_config.props, "properties per record (<= 10)");
  oracle_cmd->add_option("--rows", oracle_config.rows, "rows (model parameter or table size)");
  oracle_cmd->add_option("--seed", oracle_config.seed, "seed");
  oracle_cmd->add_option("--workload", oracle_config.workload, "builtin or workload file path");
  oracle_cmd->add_option("--phase", oracle_config.phase_index, "1-based phase to evaluate");
  oracle_cmd->add_option("--fitness", oracle_fitness, "simulated|measured");
  oracle_cmd->add_option("--samples", oracle_config.samples,
                         "queries sampled per layout in measured mode");
  oracle_cmd->add_option("--memory-budget-bytes", oracle_config.memory_budget_bytes,
                         "cap on base table size");
  oracle_cmd->add_option("--out", oracle_config.out_csv, "ranked CSV of all layouts");

  evostore::CliGenDataConfig gen_config;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a random dataset as CSV");
  gen_cmd->add_option("--rows", gen_config.rows, "rows")->required();
  gen_cmd->add_option("--props", gen_config.props, "properties per record")->required();
  gen_cmd->add_option("--seed", gen_config.seed, "seed");
  gen_cmd->add_option("--memory-budget-bytes", gen_config.memory_budget_bytes,
                      "cap on table size");
  gen_cmd->add_option("--out", gen_config.out_csv, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      run_config.params.fitness = parse_fitness(run_fitness);
      return evostore::cli_run(run_config, std::cout);
    }
    if (oracle_cmd->parsed()) {
      oracle_config.fitness = parse_fitness(oracle_fitness);
      return evostore::cli_oracle(oracle_config, std::cout);
    }
    if (gen_cmd->parsed()) {
      return evostore::cli_gen_data(gen_config, std::cout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
