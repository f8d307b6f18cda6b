#include "abpipe/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "abpipe/cli/experiment.hpp"
#include "abpipe/pipeline/blueprint.hpp"
#include "abpipe/pipeline/validation.hpp"
#include "abpipe/sim/population.hpp"
#include "abpipe/sim/scenario.hpp"

namespace abpipe::cli {

namespace fs = std::filesystem;

namespace {

// Parse + validate; prints problems and returns an exit code, or nullopt when
// the bundle is executable.
std::optional<int> load_valid(const fs::path& bundle, pipeline::PipelineSpec& spec,
                              std::ostream& out, std::ostream& err) {
  try {
    spec = pipeline::parse_blueprints(bundle);
  } catch (const pipeline::BlueprintError& e) {
    switch (e.kind()) {
      case pipeline::BlueprintErrorKind::Io:
        err << "error: " << e.what() << "\n";
        return kExitIo;
      case pipeline::BlueprintErrorKind::UnresolvedReference:
        out << "dangling reference: " << e.what() << "\n";
        return kExitDomain;
      case pipeline::BlueprintErrorKind::DuplicateName:
        out << "duplicate name: " << e.what() << "\n";
        return kExitDomain;
      case pipeline::BlueprintErrorKind::Syntax:
        out << "syntax error: " << e.what() << "\n";
        return kExitDomain;
    }
  }
  const auto report = pipeline::validate(spec);
  if (!report.ok()) {
    for (const auto& line : report.lines()) out << line << "\n";
    return kExitDomain;
  }
  return std::nullopt;
}

std::optional<int> load_config(const fs::path& scenario, sim::ScenarioConfig& cfg,
                               std::ostream& err) {
  try {
    cfg = sim::load_scenario(scenario);
  } catch (const sim::SimError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == sim::SimErrorKind::Io ? kExitIo : kExitDomain;
  }
  return std::nullopt;
}

}  // namespace

int cmd_validate(const fs::path& bundle, std::ostream& out, std::ostream& err) {
  pipeline::PipelineSpec spec;
  if (auto code = load_valid(bundle, spec, out, err)) return *code;
  out << "ok: " << spec.name << " (" << spec.ab_tests.size() << " tests, "
      << spec.pop_splits.size() << " population splits)\n";
  return kExitOk;
}

int cmd_run(const fs::path& bundle, const fs::path& scenario, std::optional<std::uint64_t> seed,
            const fs::path& out_dir, orchestrator::ExecutionMode mode, std::ostream& out,
            std::ostream& err) {
  pipeline::PipelineSpec spec;
  if (auto code = load_valid(bundle, spec, err, err)) return *code;
  sim::ScenarioConfig cfg;
  if (auto code = load_config(scenario, cfg, err)) return *code;
  RunOptions options;
  try {
    options.batch_size = batch_size_from_env();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  options.mode = mode;
  const ScenarioRun run = run_scenario(spec, cfg, seed.value_or(cfg.seed), options);
  try {
    write_run_outputs(out_dir, spec, run, options.batch_size);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  if (!run.ok()) {
    err << "error: " << run.error << " (partial trace written)\n";
    return kExitDomain;
  }
  out << spec.name << ": " << run.result.outcomes.size() << " tests, "
      << run.result.requests_total << " requests\n";
  for (const auto& [key, o] : run.result.outcomes) {
    out << "  " << key << ": p=" << o.result.p_value << " requests=" << o.requests()
        << " total=" << o.total_requests() << (o.result.significant ? " significant" : "")
        << "\n";
  }
  if (run.classifier) {
    out << "train " << std::llround(run.classifier->train_ms) << " ms, predict "
        << run.classifier->predict_ms << " ms (median)\n";
  }
  return kExitOk;
}

std::vector<std::uint64_t> expand_seeds(const std::vector<std::uint64_t>& seeds, std::size_t runs) {
  if (seeds.size() > 1) return seeds;
  const std::uint64_t base = seeds.empty() ? 1 : seeds.front();
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < runs; ++i) out.push_back(base + i);
  return out;
}

int cmd_compare(const fs::path& sequential, const fs::path& parallel, const fs::path& scenario,
                std::size_t runs, const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                std::ostream& out, std::ostream& err) {
  if (runs < 1) {
    err << "error: --runs must be at least 1\n";
    return kExitIo;
  }
  pipeline::PipelineSpec seq, par;
  if (auto code = load_valid(sequential, seq, err, err)) return *code;
  if (auto code = load_valid(parallel, par, err, err)) return *code;
  sim::ScenarioConfig cfg;
  if (auto code = load_config(scenario, cfg, err)) return *code;
  RunOptions options;
  try {
    options.batch_size = batch_size_from_env();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  const auto seed_list = expand_seeds(seeds, runs);
  const Comparison c = compare(seq, par, cfg, seed_list, options);
  try {
    write_compare_outputs(out_dir, c);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  out << report_text(c.report);
  out << "\nOverhead (median): train " << std::llround(c.report.overhead.train_ms)
      << " ms, deploy " << c.report.overhead.deploy_ms << " ms (simulated), predict "
      << c.report.overhead.predict_ms << " ms\n";
  if (c.report.partial()) return kExitDomain;
  return kExitOk;
}

int cmd_train(const fs::path& csv, const classifier::SgdParams& params, const fs::path& model_out,
              std::ostream& out, std::ostream& err) {
  try {
    const auto data = classifier::read_dataset_csv(csv);
    double ms = 0.0;
    const auto model = classifier::train(data, params, &ms);
    model.save(model_out);
    const auto m = classifier::evaluate(model, data);
    out << "trained " << model.features() << " weights on " << data.size()
        << " samples: accuracy " << m.accuracy << ", recall " << m.recall << "\n";
    out << "training time: " << std::max<long long>(1, std::llround(ms)) << " ms\n";
    return kExitOk;
  } catch (const classifier::ClassifierError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == classifier::ClassifierErrorKind::Io ? kExitIo : kExitDomain;
  }
}

int cmd_gen_data(const fs::path& scenario, std::uint64_t n, const fs::path& csv_out,
                 std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  if (n < 2) {
    err << "error: --n must be at least 2\n";
    return kExitIo;
  }
  sim::ScenarioConfig cfg;
  if (auto code = load_config(scenario, cfg, err)) return *code;
  if (seed) cfg.seed = *seed;
  const auto data = sim::generate_training_data(cfg, n);
  std::ofstream file(csv_out, std::ios::binary);
  if (!file) {
    err << "error: cannot write " << csv_out.string() << "\n";
    return kExitIo;
  }
  classifier::write_dataset_csv(file, data);
  std::size_t positives = 0;
  for (int y : data.y) positives += y ? 1 : 0;
  out << "wrote " << n << " rows, " << positives << " positive\n";
  return kExitOk;
}

}  // namespace abpipe::cli
