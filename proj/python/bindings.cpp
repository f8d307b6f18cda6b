#include <filesystem>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "abpipe/cli/experiment.hpp"
#include "abpipe/pipeline/blueprint.hpp"
#include "abpipe/pipeline/validation.hpp"
#include "abpipe/sim/population.hpp"
#include "abpipe/stats/hypothesis.hpp"

namespace py = pybind11;
using namespace abpipe;

namespace {

stats::Direction direction(const std::string& text) {
  const auto d = stats::parse_direction(text);
  if (!d) throw py::value_error("unknown direction '" + text + "'");
  return *d;
}

py::dict to_dict(const stats::StatResult& r) {
  py::dict d;
  d["test_name"] = r.test_name;
  d["p_value"] = r.p_value;
  d["statistic"] = r.statistic;
  d["mean_a"] = r.mean_a;
  d["mean_b"] = r.mean_b;
  d["n_a"] = r.n_a;
  d["n_b"] = r.n_b;
  d["significant"] = r.significant;
  d["requests_consumed"] = r.requests_consumed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "A/B testing pipeline engine with population splits";

  m.def(
      "welch_t_test",
      [](std::uint64_t n_a, double mean_a, double m2_a, std::uint64_t n_b, double mean_b, double m2_b,
         const std::string& dir, double alpha) {
        return to_dict(stats::welch_t_test(stats::MetricAccumulator::from_moments(n_a, mean_a, m2_a),
                                           stats::MetricAccumulator::from_moments(n_b, mean_b, m2_b),
                                           direction(dir), alpha));
      },
      py::arg("n_a"), py::arg("mean_a"), py::arg("m2_a"), py::arg("n_b"), py::arg("mean_b"),
      py::arg("m2_b"), py::arg("direction") = "B_greater", py::arg("alpha") = 0.05);

  m.def(
      "two_proportion_test",
      [](std::uint64_t n_a, std::uint64_t k_a, std::uint64_t n_b, std::uint64_t k_b,
         const std::string& dir, double alpha) {
        return to_dict(stats::two_proportion_test(stats::MetricAccumulator::from_proportion(n_a, k_a),
                                                  stats::MetricAccumulator::from_proportion(n_b, k_b),
                                                  direction(dir), alpha));
      },
      py::arg("n_a"), py::arg("successes_a"), py::arg("n_b"), py::arg("successes_b"),
      py::arg("direction") = "B_greater", py::arg("alpha") = 0.05);

  // Violation lines, empty when the bundle is valid.
  m.def("validate", [](const std::string& dir) {
    std::vector<std::string> lines;
    try {
      lines = pipeline::validate(pipeline::parse_blueprints(std::filesystem::path(dir))).lines();
    } catch (const pipeline::BlueprintError& e) {
      if (e.kind() == pipeline::BlueprintErrorKind::Io) throw py::value_error(e.what());
      lines.push_back(e.kind() == pipeline::BlueprintErrorKind::UnresolvedReference
                          ? std::string("dangling reference: ") + e.what()
                          : std::string("syntax error: ") + e.what());
    }
    return lines;
  });

  // Summary JSON of one seeded run.
  m.def(
      "run_summary",
      [](const std::string& bundle, const std::string& scenario, std::uint64_t seed, bool threads) {
        const auto spec = pipeline::parse_blueprints(std::filesystem::path(bundle));
        const auto cfg = sim::load_scenario(scenario);
        cli::RunOptions options;
        options.batch_size = cli::batch_size_from_env();
        options.mode = threads ? orchestrator::ExecutionMode::Threads
                               : orchestrator::ExecutionMode::Serialized;
        py::gil_scoped_release release;
        const auto run = cli::run_scenario(spec, cfg, seed, options);
        if (!run.ok()) throw std::runtime_error(run.error);
        return cli::summary_json(spec, run, options.batch_size);
      },
      py::arg("bundle"), py::arg("scenario"), py::arg("seed"), py::arg("threads") = false);

  // Positive count of a generated dataset, for quick checks of the generator.
  m.def(
      "generated_positives",
      [](const std::string& scenario, std::uint64_t n) {
        const auto data = sim::generate_training_data(sim::load_scenario(scenario), n);
        std::uint64_t k = 0;
        for (int y : data.y) k += static_cast<std::uint64_t>(y);
        return k;
      },
      py::arg("scenario"), py::arg("n"));
}
