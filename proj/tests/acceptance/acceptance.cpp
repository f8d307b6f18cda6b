// Acceptance suite: one PASS/FAIL line per criterion.
//
//   abpipe_acceptance                 all criteria
//   abpipe_acceptance --criterion N   criterion N only
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abpipe/cli/commands.hpp"
#include "abpipe/cli/experiment.hpp"
#include "abpipe/pipeline/blueprint.hpp"
#include "abpipe/pipeline/validation.hpp"
#include "abpipe/stats/hypothesis.hpp"
#include "reference_interpreter.hpp"

namespace fs = std::filesystem;
using namespace abpipe;

namespace {

constexpr std::size_t kRuns = 15;
constexpr std::uint64_t kBaseSeed = 1;

fs::path source(const std::string& rel) { return fs::path(ABPIPE_SOURCE_DIR) / rel; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "abpipe-acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::vector<std::uint64_t> seeds() { return cli::expand_seeds({kBaseSeed}, kRuns); }

const cli::Comparison& desk_comparison() {
  static const cli::Comparison c = [] {
    const auto seq = pipeline::parse_blueprints(source("scenarios/sequential"));
    const auto par = pipeline::parse_blueprints(source("scenarios/parallel"));
    const auto cfg = sim::load_scenario(source("scenarios/default.json"));
    return cli::compare(seq, par, cfg, seeds(), cli::RunOptions{});
  }();
  return c;
}

// Reduction of required requests, and earlier termination of the
// recommendation test under the split.
Outcome criterion1() {
  const auto& r = desk_comparison().report;
  if (r.partial()) return {false, "comparison incomplete: " + r.failures.front()};
  const auto* seq_rec = r.row("sequential", "Recommendation-upgrade-experiment");
  const auto* par_rec = r.row("parallel", "Recommendation-pipeline/Recommendation-upgrade-experiment");
  if (!seq_rec || !par_rec) return {false, "recommendation rows missing"};
  const bool reduction = r.reduction_pct >= 50.0;
  const bool earlier = par_rec->median_until() < seq_rec->median_until();
  std::ostringstream d;
  d << "reduction_pct " << fmt(r.reduction_pct, 2) << " (need >= 50; sequential "
    << fmt(r.sequential_total, 0) << ", parallel " << fmt(r.parallel_total, 0)
    << "); recommendation test stops at " << fmt(par_rec->median_until(), 0) << " vs "
    << fmt(seq_rec->median_until(), 0) << " routed requests (" << (earlier ? "earlier" : "not earlier")
    << "); routed-only reduction " << fmt(r.reduction_pct_until_significant, 2);
  return {reduction && earlier, d.str()};
}

Outcome criterion2() {
  const auto& r = desk_comparison().report;
  const auto rec = r.split_fractions.find("Recommendation-pipeline");
  const auto rev = r.split_fractions.find("Review-pipeline");
  if (rec == r.split_fractions.end() || rev == r.split_fractions.end()) {
    return {false, "split fractions missing"};
  }
  const double f_rec = cli::median(rec->second);
  const double f_rev = cli::median(rev->second);
  const bool ok = f_rec >= 0.03 && f_rec <= 0.06 && f_rev >= 0.93 && f_rev <= 0.97;
  return {ok, "recommendation " + fmt(f_rec) + " in [0.03, 0.06], review " + fmt(f_rev) +
                  " in [0.93, 0.97]"};
}

Outcome criterion3() {
  std::ifstream in(source("tests/data/welch_oracle.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t cases = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> c;
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    const auto a = stats::MetricAccumulator::from_moments(std::stoull(c[1]), std::stod(c[2]), std::stod(c[3]));
    const auto b = stats::MetricAccumulator::from_moments(std::stoull(c[4]), std::stod(c[5]), std::stod(c[6]));
    const auto r = stats::welch_t_test(a, b, *stats::parse_direction(c[7]));
    worst = std::max(worst, std::abs(r.p_value - std::stod(c[8])));
    ++cases;
  }
  const bool oracle_ok = cases == 100 && worst <= 1e-9;

  // equal n and equal variance: Welch df = 2n - 2 and t equals the pooled t
  bool degenerate_ok = true;
  for (std::uint64_t n : {8u, 300u, 20000u}) {
    const auto a = stats::MetricAccumulator::from_moments(n, 0.4, 0.7 * (n - 1));
    const auto b = stats::MetricAccumulator::from_moments(n, 0.45, 0.7 * (n - 1));
    const auto w = stats::welch_statistic(a, b);
    const double pooled_t = (b.mean() - a.mean()) / std::sqrt(0.7 * 2.0 / n);
    degenerate_ok = degenerate_ok && std::abs(w.df - (2.0 * n - 2.0)) <= 1e-9 * n &&
                    std::abs(w.t - pooled_t) <= 1e-12;
  }

  const auto clicks_a = stats::MetricAccumulator::from_proportion(10000, 1470);
  const auto clicks_b = stats::MetricAccumulator::from_proportion(10000, 1617);
  const auto z = stats::two_proportion_test(clicks_a, clicks_b, stats::Direction::BGreater);
  const bool z_ok = z.p_value < 0.05;

  std::ostringstream d;
  d << cases << " Welch cases, max |dp| " << std::scientific << std::setprecision(2) << worst
    << " (<= 1e-9); Student degeneracy " << (degenerate_ok ? "ok" : "mismatch")
    << "; two-proportion z " << std::fixed << std::setprecision(3) << z.statistic << " p "
    << std::setprecision(5) << z.p_value << " (< 0.05)";
  return {oracle_ok && degenerate_ok && z_ok, d.str()};
}

Outcome criterion4() {
  std::size_t checked = 0, mismatched = 0, with_split = 0;
  std::string first_bad;
  for (std::uint64_t seed = 1; checked < 200; ++seed) {
    const auto c = refimpl::random_case(seed);
    if (!pipeline::validate(c.spec).ok()) continue;
    ++checked;
    const auto expected = refimpl::reference_trace(c);
    for (const auto mode : {orchestrator::ExecutionMode::Serialized, orchestrator::ExecutionMode::Threads}) {
      refimpl::ScriptedSystem system(c);
      refimpl::ScriptedAnalyzer analyzer(c);
      orchestrator::ExecutionTrace got;
      try {
        got = orchestrator::execute_pipeline(c.spec, system, analyzer, {mode}).trace;
      } catch (const std::exception& e) {
        got.clear();
      }
      if (got != expected) {
        ++mismatched;
        if (first_bad.empty()) first_bad = c.spec.name;
      }
    }
    with_split += std::any_of(expected.begin(), expected.end(), [](const auto& e) {
      return e.kind == orchestrator::EventKind::SplitEntry;
    });
  }
  std::string d = std::to_string(checked) + " validated specs (" + std::to_string(with_split) +
                  " entering a split), serialized and threaded engine traces vs reference: " +
                  std::to_string(mismatched) + " mismatches";
  if (!first_bad.empty()) d += ", first " + first_bad;
  return {mismatched == 0, d};
}

// Expected live knowledge instances after each event: 1 + sub-pipelines of the
// entered split, 0 once the pipeline has ended.
bool lifecycle_holds(const orchestrator::ExecutionTrace& trace, const pipeline::PipelineSpec& spec) {
  std::size_t inside = 0;
  for (const auto& e : trace) {
    std::size_t expected = 1 + inside;
    if (e.kind == orchestrator::EventKind::SplitEntry) {
      inside = spec.find_split(e.detail)->sub_pipelines.size();
      expected = 1 + inside;
    } else if (e.kind == orchestrator::EventKind::SplitExit) {
      inside = 0;
      expected = 1;
    } else if (e.kind == orchestrator::EventKind::End && e.instance == spec.name) {
      expected = 0;
    }
    if (e.live_instances != expected) return false;
  }
  return !trace.empty() && trace.back().live_instances == 0;
}

Outcome criterion5() {
  const auto par = pipeline::parse_blueprints(source("scenarios/parallel"));
  const auto cfg = sim::load_scenario(source("scenarios/default.json"));
  std::size_t lifecycle_bad = 0, overlap_bad = 0, mode_bad = 0, runs = 0, failed = 0;
  for (std::uint64_t seed : seeds()) {
    cli::RunOptions serial;
    serial.record_users = true;
    cli::RunOptions threads = serial;
    threads.mode = orchestrator::ExecutionMode::Threads;
    const auto a = cli::run_scenario(par, cfg, seed, serial);
    const auto b = cli::run_scenario(par, cfg, seed, threads);
    ++runs;
    if (!a.ok() || !b.ok()) {
      ++failed;
      continue;
    }
    if (!lifecycle_holds(a.result.trace, par) || !lifecycle_holds(b.result.trace, par)) ++lifecycle_bad;

    const auto& split = par.pop_splits.front();
    std::vector<std::set<std::uint64_t>> users;
    for (const auto& sub : split.sub_pipelines) {
      std::set<std::uint64_t> s;
      for (const auto& test : sub.ab_tests) {
        for (auto u : a.store->served_users(test)) s.insert(u);
      }
      users.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < users.size(); ++i) {
      for (std::size_t j = i + 1; j < users.size(); ++j) {
        std::vector<std::uint64_t> common;
        std::set_intersection(users[i].begin(), users[i].end(), users[j].begin(), users[j].end(),
                              std::back_inserter(common));
        if (!common.empty()) ++overlap_bad;
      }
    }

    bool same = a.result.outcomes.size() == b.result.outcomes.size();
    for (const auto& [key, o] : a.result.outcomes) {
      const auto it = b.result.outcomes.find(key);
      same = same && it != b.result.outcomes.end() && it->second.result == o.result &&
             it->second.checkpoints == o.checkpoints;
    }
    if (!same) ++mode_bad;
  }
  std::size_t random_bad = 0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; checked < 200; ++seed) {
    const auto c = refimpl::random_case(seed);
    if (!pipeline::validate(c.spec).ok()) continue;
    ++checked;
    refimpl::ScriptedSystem system(c);
    refimpl::ScriptedAnalyzer analyzer(c);
    const auto r = orchestrator::execute_pipeline(c.spec, system, analyzer);
    if (!lifecycle_holds(r.trace, c.spec)) ++random_bad;
  }
  std::ostringstream d;
  d << runs << " seeded runs x 2 modes: lifecycle violations " << lifecycle_bad
    << ", overlapping user sets " << overlap_bad << ", serialized/threaded result differences "
    << mode_bad << ", failed runs " << failed << "; lifecycle on " << checked
    << " random specs: " << random_bad << " violations";
  return {lifecycle_bad == 0 && overlap_bad == 0 && mode_bad == 0 && failed == 0 && random_bad == 0,
          d.str()};
}

Outcome criterion6() {
  const fs::path out = scratch("overhead");
  std::ostringstream stdout_text, err;
  const int code = cli::cmd_compare(source("scenarios/sequential"), source("scenarios/parallel"),
                                    source("scenarios/default.json"), kRuns, {kBaseSeed}, out,
                                    stdout_text, err);
  const bool emitted = code == cli::kExitOk &&
                       stdout_text.str().find("Overhead (median): train ") != std::string::npos &&
                       stdout_text.str().find(" deploy ") != std::string::npos &&
                       stdout_text.str().find(" predict ") != std::string::npos;
  const auto& o = desk_comparison().report.overhead;
  const auto cfg = sim::load_scenario(source("scenarios/default.json"));
  const auto trained = cli::train_split_model(cfg);
  const bool predict_ok = o.predict_ms <= 1.0;
  const bool train_ok = trained.train_ms <= 5000.0 && cfg.training_size == 20000;
  std::ostringstream d;
  d << "triplet " << (emitted ? "emitted" : "missing") << "; train " << fmt(o.train_ms, 1)
    << " ms (20000 rows, single fit " << fmt(trained.train_ms, 1) << " ms, need <= 5000), deploy "
    << fmt(o.deploy_ms, 1) << " ms simulated, predict " << std::scientific << std::setprecision(2)
    << o.predict_ms << " ms (need <= 1)";
  return {emitted && predict_ok && train_ok, d.str()};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) {
    diff = a.filename().string() + ": file sets differ";
    return false;
  }
  for (const auto& rel : fa) {
    std::ifstream x(a / rel, std::ios::binary), y(b / rel, std::ios::binary);
    const std::string sx((std::istreambuf_iterator<char>(x)), {});
    const std::string sy((std::istreambuf_iterator<char>(y)), {});
    if (sx != sy) {
      diff = rel.string();
      return false;
    }
  }
  return true;
}

Outcome criterion7() {
  const fs::path root = scratch("determinism");
  const fs::path scenario = source("scenarios/default.json");
  std::ostringstream sink;
  std::vector<std::string> bad;
  std::size_t commands = 0;

  auto twice = [&](const std::string& name, const std::function<int(const fs::path&)>& cmd) {
    ++commands;
    const fs::path a = root / (name + "-1"), b = root / (name + "-2");
    fs::create_directories(a);
    fs::create_directories(b);
    if (cmd(a) != 0 || cmd(b) != 0) {
      bad.push_back(name + " (exit)");
      return;
    }
    std::string diff;
    if (!same_tree(a, b, diff)) bad.push_back(name + " (" + diff + ")");
  };

  twice("validate", [&](const fs::path& dir) {
    std::ofstream out(dir / "stdout.txt", std::ios::binary);
    return cli::cmd_validate(source("scenarios/parallel"), out, sink);
  });
  for (const auto mode : {orchestrator::ExecutionMode::Serialized, orchestrator::ExecutionMode::Threads}) {
    const std::string tag = mode == orchestrator::ExecutionMode::Threads ? "threads" : "serialized";
    twice("run-parallel-" + tag, [&](const fs::path& dir) {
      return cli::cmd_run(source("scenarios/parallel"), scenario, 7, dir, mode, sink, sink);
    });
  }
  twice("run-sequential", [&](const fs::path& dir) {
    return cli::cmd_run(source("scenarios/sequential"), scenario, 7, dir,
                        orchestrator::ExecutionMode::Serialized, sink, sink);
  });
  twice("compare", [&](const fs::path& dir) {
    return cli::cmd_compare(source("scenarios/sequential"), source("scenarios/parallel"), scenario,
                            kRuns, {kBaseSeed}, dir, sink, sink);
  });
  twice("gen-data", [&](const fs::path& dir) {
    return cli::cmd_gen_data(scenario, 20000, dir / "data.csv", std::nullopt, sink, sink);
  });
  twice("train", [&](const fs::path& dir) {
    return cli::cmd_train(root / "gen-data-1" / "data.csv", classifier::SgdParams{}, dir / "model.json",
                          sink, sink);
  });

  std::string d = std::to_string(commands) + " commands run twice: ";
  if (bad.empty()) {
    d += "all outputs byte-identical";
  } else {
    d += "differences in";
    for (const auto& b : bad) d += " " + b;
  }
  return {bad.empty(), d};
}

Outcome criterion8() {
  struct Fixture {
    const char* dir;
    const char* kind;
  };
  const Fixture fixtures[] = {
      {"tests/fixtures/dangling_reference", "dangling reference"},
      {"tests/fixtures/non_exclusive_split", "non-exclusive split conditions"},
      {"tests/fixtures/interfering_subpipelines", "interfering sub-pipelines"},
      {"tests/fixtures/unreachable_end", "unreachable End"},
      {"tests/fixtures/bad_fractions", "bad assignment fractions"},
  };
  const std::vector<std::string> all_kinds = {"dangling reference", "non-exclusive split conditions",
                                              "interfering sub-pipelines", "unreachable End",
                                              "bad assignment fractions"};
  std::vector<std::string> problems;
  std::size_t detected = 0;
  for (const auto& f : fixtures) {
    std::ostringstream out, err;
    const int code = cli::cmd_validate(source(f.dir), out, err);
    if (code == cli::kExitDomain && out.str().find(std::string(f.kind) + ": ") != std::string::npos) {
      ++detected;
    } else {
      problems.push_back(std::string(f.dir) + " not flagged as " + f.kind);
    }
  }
  for (const char* shipped : {"scenarios/sequential", "scenarios/parallel"}) {
    std::ostringstream out, err;
    const int code = cli::cmd_validate(source(shipped), out, err);
    bool clean = code == cli::kExitOk;
    for (const auto& k : all_kinds) clean = clean && out.str().find(k + ": ") == std::string::npos;
    if (!clean) problems.push_back(std::string(shipped) + " reported violations");
  }
  std::string d = std::to_string(detected) + "/5 violation classes detected on their fixtures; shipped scenarios " +
                  (problems.empty() ? "clean" : "not clean");
  for (const auto& p : problems) d += "; " + p;
  return {problems.empty(), d};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> list = {
      {"request reduction with population split", criterion1},
      {"split-fraction fidelity", criterion2},
      {"statistics oracle suite", criterion3},
      {"algorithm conformance against reference interpreter", criterion4},
      {"split semantics", criterion5},
      {"overhead report", criterion6},
      {"determinism", criterion7},
      {"validation suite", criterion8},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<std::size_t> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::stoul(argv[++i]);
    } else {
      std::cerr << "usage: abpipe_acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (only && (*only < 1 || *only > criteria().size())) {
    std::cerr << "criterion must be 1.." << criteria().size() << "\n";
    return 2;
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (only && *only != i + 1) continue;
    Outcome o;
    try {
      o = criteria()[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " "
              << criteria()[i].first << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
