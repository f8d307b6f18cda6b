#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "abpipe/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace abpipe;

int main(int argc, char** argv) {
  CLI::App app{"Automated execution of A/B testing pipelines with population splits"};
  app.require_subcommand(1);

  std::string bundle;
  auto* validate = app.add_subcommand("validate", "Parse and validate a blueprint bundle");
  validate->add_option("dir", bundle, "Blueprint directory")->required();

  std::string scenario = "scenarios/default.json";
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string mode = "serialized";
  auto* run = app.add_subcommand("run", "Execute one pipeline against the simulated web-store");
  run->add_option("dir", bundle, "Blueprint directory")->required();
  run->add_option("--scenario", scenario, "Scenario file");
  run->add_option("--seed", seed, "Seed (defaults to the scenario seed)");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--mode", mode, "Sub-pipeline execution: serialized | threads")
      ->check(CLI::IsMember({"serialized", "threads"}));

  std::string seq_dir, par_dir;
  std::size_t runs = 15;
  std::vector<std::uint64_t> seeds;
  auto* compare = app.add_subcommand("compare", "Compare a sequential and a parallel pipeline");
  compare->add_option("seq-dir", seq_dir, "Sequential blueprint directory")->required();
  compare->add_option("par-dir", par_dir, "Parallel blueprint directory")->required();
  compare->add_option("--scenario", scenario, "Scenario file");
  compare->add_option("--runs", runs, "Number of seeded runs");
  compare->add_option("--seeds", seeds, "Seed list, or one base seed")->delimiter(',');
  compare->add_option("--out", out_dir, "Output directory")->required();

  std::string csv;
  classifier::SgdParams params;
  std::string model_out;
  auto* train = app.add_subcommand("train", "Train the population split classifier");
  train->add_option("csv", csv, "Training data")->required();
  train->add_option("--epochs", params.epochs, "Epochs");
  train->add_option("--eta0", params.eta0, "Initial learning rate");
  train->add_option("--l2", params.l2, "L2 strength");
  train->add_option("--seed", params.seed, "Shuffle seed");
  train->add_option("--out", model_out, "Model file")->required();

  std::uint64_t n = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate a labelled propensity dataset");
  gen->add_option("--scenario", scenario, "Scenario file");
  gen->add_option("--n", n, "Rows")->required();
  gen->add_option("--seed", seed, "Seed (defaults to the scenario seed)");
  gen->add_option("--out", csv, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitIo;
  }

  try {
    if (*validate) return cli::cmd_validate(bundle, std::cout, std::cerr);
    if (*run) {
      const auto m = mode == "threads" ? orchestrator::ExecutionMode::Threads
                                       : orchestrator::ExecutionMode::Serialized;
      return cli::cmd_run(bundle, scenario, seed, out_dir, m, std::cout, std::cerr);
    }
    if (*compare) {
      return cli::cmd_compare(seq_dir, par_dir, scenario, runs, seeds, out_dir, std::cout,
                              std::cerr);
    }
    if (*train) return cli::cmd_train(csv, params, model_out, std::cout, std::cerr);
    if (*gen) return cli::cmd_gen_data(scenario, n, csv, seed, std::cout, std::cerr);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitDomain;
  }
  return cli::kExitIo;
}
