#include "abpipe/cli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "abpipe/format.hpp"
#include "abpipe/sim/population.hpp"
#include "abpipe/stats/monitor.hpp"

namespace abpipe::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t batch_size_from_env() {
  const char* raw = std::getenv("ABPIPE_BATCH_SIZE");
  if (!raw || !*raw) return stats::kDefaultBatchSize;
  const std::string_view text(raw);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || value < 1) {
    throw std::invalid_argument("ABPIPE_BATCH_SIZE must be a positive integer, got '" +
                                std::string(text) + "'");
  }
  return value;
}

TrainedClassifier train_split_model(const sim::ScenarioConfig& cfg) {
  const auto data = sim::generate_training_data(cfg, cfg.training_size);
  classifier::SgdParams params = cfg.sgd;
  params.seed = cfg.seed;
  TrainedClassifier out;
  out.model = std::make_shared<const classifier::LinearModel>(
      classifier::train(data, params, &out.train_ms));
  return out;
}

double median_predict_ms(const classifier::LinearModel& model,
                         const std::vector<sim::UserProfile>& population, std::size_t samples) {
  if (population.empty() || samples == 0) return 0.0;
  std::vector<double> ms;
  ms.reserve(samples);
  volatile int sink = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto& user = population[(i * 7919) % population.size()];
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + model.predict_class(user.features);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return median(std::move(ms));
}

ScenarioRun run_scenario(const pipeline::PipelineSpec& spec, sim::ScenarioConfig cfg,
                         std::uint64_t seed, const RunOptions& options) {
  cfg.seed = seed;
  ScenarioRun run;
  run.seed = seed;
  auto population = std::make_shared<const std::vector<sim::UserProfile>>(
      sim::generate_population(cfg, cfg.population_size));
  std::shared_ptr<const classifier::LinearModel> model;
  if (!spec.pop_splits.empty()) {
    TrainedClassifier tc = train_split_model(cfg);
    classifier::Dataset truth;
    for (const auto& u : *population) {
      truth.x.push_back(u.features);
      truth.y.push_back(u.purchaser ? 1 : 0);
    }
    tc.holdout = classifier::evaluate(*tc.model, truth);
    tc.predict_ms = median_predict_ms(*tc.model, *population, 1001);
    model = tc.model;
    run.classifier = std::move(tc);
  }
  run.store = std::make_shared<sim::WebStore>(cfg, population, model);
  run.store->set_record_users(options.record_users);
  orchestrator::MonitorAnalyzer analyzer(options.batch_size);
  orchestrator::KnowledgeRepository knowledge;
  orchestrator::ExecutionOptions exec;
  exec.mode = options.mode;
  {
    orchestrator::PipelineExecution execution(spec, *run.store, analyzer, knowledge, exec);
    try {
      execution.run();
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    run.result = execution.result();
  }
  return run;
}

namespace {

std::string file_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '/') {
      out += "__";
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ordered_json result_json(const stats::StatResult& r) {
  ordered_json j;
  j["p_value"] = r.p_value;
  j["statistic"] = r.statistic;
  j["mean_a"] = r.mean_a;
  j["mean_b"] = r.mean_b;
  j["n_a"] = r.n_a;
  j["n_b"] = r.n_b;
  j["significant"] = r.significant;
  return j;
}

}  // namespace

std::string summary_json(const pipeline::PipelineSpec& spec, const ScenarioRun& run,
                         std::uint64_t batch_size) {
  ordered_json j;
  j["pipeline"] = spec.name;
  j["seed"] = run.seed;
  j["batch_size"] = batch_size;
  j["completed"] = run.ok();
  if (!run.error.empty()) j["error"] = run.error;
  j["requests_total"] = run.result.requests_total;
  ordered_json tests = ordered_json::object();
  for (const auto& [key, o] : run.result.outcomes) {
    ordered_json t;
    t["instance"] = o.instance;
    t["test"] = o.test;
    t["requests"] = o.requests();
    t["total_requests"] = o.total_requests();
    t["start_request"] = o.start_request;
    t["end_request"] = o.end_request;
    t["checkpoints"] = o.checkpoints.size();
    t["result"] = result_json(o.result);
    tests[key] = t;
  }
  j["tests"] = tests;
  ordered_json splits = ordered_json::object();
  for (const auto& s : run.result.splits) {
    ordered_json sj;
    sj["entry_request"] = s.entry_request;
    sj["exit_request"] = s.exit_request;
    ordered_json fractions = ordered_json::object();
    ordered_json totals = ordered_json::object();
    for (std::size_t i = 0; i < s.sub_pipelines.size(); ++i) {
      fractions[s.sub_pipelines[i]] = s.fraction(i);
      totals[s.sub_pipelines[i]] = s.sub_total(i);
    }
    sj["split_fractions"] = fractions;
    sj["unrouted_fraction"] =
        s.window() == 0 ? 0.0 : static_cast<double>(s.unrouted) / static_cast<double>(s.window());
    sj["sub_pipeline_totals"] = totals;
    splits[s.split] = sj;
  }
  j["splits"] = splits;
  if (run.classifier) {
    j["classifier"] = {{"accuracy", run.classifier->holdout.accuracy},
                       {"recall", run.classifier->holdout.recall},
                       {"precision", run.classifier->holdout.precision}};
  }
  return j.dump(2) + "\n";
}

void write_run_outputs(const fs::path& out_dir, const pipeline::PipelineSpec& spec,
                       const ScenarioRun& run, std::uint64_t batch_size) {
  fs::create_directories(out_dir / "pvalues");
  {
    std::ostringstream trace;
    orchestrator::write_trace_jsonl(trace, run.result.trace);
    write_text(out_dir / "trace.jsonl", trace.str());
  }
  write_text(out_dir / "summary.json", summary_json(spec, run, batch_size));
  for (const auto& [key, o] : run.result.outcomes) {
    std::ostringstream csv;
    stats::write_pvalue_csv(csv, o.checkpoints);
    write_text(out_dir / "pvalues" / (file_key(key) + ".csv"), csv.str());
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const TestRow* ComparisonReport::row(const std::string& pipeline, const std::string& test) const {
  for (const auto& r : rows) {
    if (r.pipeline == pipeline && (r.test == test || r.key == test)) return &r;
  }
  return nullptr;
}

Comparison compare(const pipeline::PipelineSpec& sequential, const pipeline::PipelineSpec& parallel,
                   const sim::ScenarioConfig& cfg, const std::vector<std::uint64_t>& seeds,
                   const RunOptions& options, unsigned workers) {
  Comparison out;
  const std::size_t n = seeds.size();
  out.sequential.resize(n);
  out.parallel.resize(n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < 2 * n;) {
      const bool par = job % 2 == 1;
      const std::size_t i = job / 2;
      ScenarioRun run = run_scenario(par ? parallel : sequential, cfg, seeds[i], options);
      run.store.reset();
      (par ? out.parallel : out.sequential)[i] = std::move(run);
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, 2 * n));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  ComparisonReport& report = out.report;
  report.runs = n;
  report.seeds = seeds;
  report.batch_size = options.batch_size;

  std::set<std::string> shared;
  {
    const auto seq_root = sequential.root_test_names();
    for (const auto& t : parallel.root_test_names()) {
      if (std::find(seq_root.begin(), seq_root.end(), t) != seq_root.end()) shared.insert(t);
    }
  }

  auto collect = [&](const std::string& kind, const std::vector<ScenarioRun>& runs) {
    // rows appear in the order the first successful run executed the tests
    std::vector<std::pair<std::uint64_t, std::string>> order;
    std::map<std::string, TestRow> rows;
    for (const auto& run : runs) {
      if (!run.ok()) {
        report.failures.push_back(kind + " seed " + std::to_string(run.seed) + ": " +
                                  (run.error.empty() ? "incomplete" : run.error));
        continue;
      }
      for (const auto& [key, o] : run.result.outcomes) {
        auto [it, inserted] = rows.try_emplace(key);
        TestRow& row = it->second;
        if (inserted) {
          row.pipeline = kind;
          row.key = key;
          row.test = o.test;
          row.sub_pipeline = o.instance == (kind == "parallel" ? parallel.name : sequential.name)
                                 ? std::string()
                                 : o.instance;
          row.shared = row.sub_pipeline.empty() && shared.contains(o.test);
          order.emplace_back(o.start_request, key);
        }
        row.until.push_back(static_cast<double>(o.requests()));
        row.total.push_back(static_cast<double>(o.total_requests()));
        row.significant_runs += o.result.significant ? 1 : 0;
      }
      if (kind != "parallel") continue;
      for (const auto& s : run.result.splits) {
        for (std::size_t i = 0; i < s.sub_pipelines.size(); ++i) {
          const std::string& sub = s.sub_pipelines[i];
          report.sub_totals[sub].push_back(static_cast<double>(s.sub_total(i)));
          report.split_fractions[sub].push_back(s.fraction(i));
          double until = 0.0;
          for (const auto& [key, o] : run.result.outcomes) {
            if (o.instance == sub) until += static_cast<double>(o.requests());
          }
          report.sub_until[sub].push_back(until);
        }
        report.unrouted_fractions.push_back(
            s.window() == 0 ? 0.0
                            : static_cast<double>(s.unrouted) / static_cast<double>(s.window()));
      }
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [start, key] : order) report.rows.push_back(rows.at(key));
  };
  collect("sequential", out.sequential);
  collect("parallel", out.parallel);

  for (const auto& r : report.rows) {
    if (r.pipeline != "sequential" || r.shared) continue;
    report.sequential_total += r.median_total();
    report.sequential_until += r.median_until();
  }
  if (!report.sub_totals.empty()) {
    for (const auto& [sub, totals] : report.sub_totals) {
      report.parallel_total = std::max(report.parallel_total, median(totals));
      report.parallel_until = std::max(report.parallel_until, median(report.sub_until.at(sub)));
    }
  } else {
    for (const auto& r : report.rows) {
      if (r.pipeline != "parallel" || r.shared) continue;
      report.parallel_total += r.median_total();
      report.parallel_until += r.median_until();
    }
  }
  if (report.sequential_total > 0.0) {
    report.reduction_pct = (1.0 - report.parallel_total / report.sequential_total) * 100.0;
  }
  if (report.sequential_until > 0.0) {
    report.reduction_pct_until_significant =
        (1.0 - report.parallel_until / report.sequential_until) * 100.0;
  }

  std::vector<double> train_ms, predict_ms;
  for (const auto& run : out.parallel) {
    if (!run.classifier) continue;
    train_ms.push_back(run.classifier->train_ms);
    predict_ms.push_back(run.classifier->predict_ms);
  }
  report.overhead.train_ms = median(train_ms);
  report.overhead.predict_ms = median(predict_ms);
  report.overhead.deploy_ms = cfg.deploy_latency_ms;
  return out;
}

std::string report_json(const ComparisonReport& report) {
  ordered_json j;
  j["runs"] = report.runs;
  j["seeds"] = report.seeds;
  j["batch_size"] = report.batch_size;
  ordered_json tests = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json t;
    t["pipeline"] = r.pipeline;
    t["test"] = r.test;
    t["key"] = r.key;
    t["sub_pipeline"] = r.sub_pipeline;
    t["shared"] = r.shared;
    t["median_requests_until_significant"] = r.median_until();
    t["median_total_requests"] = r.median_total();
    t["significant_runs"] = r.significant_runs;
    t["requests_until_significant"] = r.until;
    t["total_requests"] = r.total;
    tests.push_back(t);
  }
  j["tests"] = tests;
  ordered_json subs = ordered_json::object();
  for (const auto& [sub, totals] : report.sub_totals) {
    subs[sub] = {{"median_total_requests", median(totals)},
                 {"median_requests_until_significant", median(report.sub_until.at(sub))},
                 {"median_split_fraction", median(report.split_fractions.at(sub))},
                 {"split_fractions", report.split_fractions.at(sub)}};
  }
  j["sub_pipelines"] = subs;
  j["median_unrouted_fraction"] = median(report.unrouted_fractions);
  j["sequential_total"] = report.sequential_total;
  j["parallel_total"] = report.parallel_total;
  j["reduction_pct"] = report.reduction_pct;
  j["sequential_until_significant"] = report.sequential_until;
  j["parallel_until_significant"] = report.parallel_until;
  j["reduction_pct_until_significant"] = report.reduction_pct_until_significant;
  j["partial"] = report.partial();
  j["failures"] = report.failures;
  return j.dump(2) + "\n";
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s + " ";
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string report_text(const ComparisonReport& report) {
  std::string out;
  out += "Requests needed for a significant result (median of " + std::to_string(report.runs) +
         " runs, batch " + std::to_string(report.batch_size) + ")\n\n";
  out += pad("Pipeline", 12) + pad("Test", 62) + pad("Until p<=alpha", 16, true) +
         pad("Total requests", 16, true) + "\n";
  auto section = [&](const std::string& kind) {
    for (const auto& r : report.rows) {
      if (r.pipeline != kind) continue;
      out += pad(kind, 12) + pad(r.key + (r.shared ? " (shared)" : ""), 62) +
             pad(fmt("%.0f", r.median_until()), 16, true) +
             pad(fmt("%.0f", r.median_total()), 16, true) + "\n";
    }
  };
  section("sequential");
  out += pad("Total (SUM sequential tests)", 90) + pad(fmt("%.0f", report.sequential_total), 16, true) +
         "\n";
  section("parallel");
  for (const auto& [sub, totals] : report.sub_totals) {
    out += pad("parallel", 12) + pad("sub-pipeline " + sub, 62) +
           pad(fmt("%.0f", median(report.sub_until.at(sub))), 16, true) +
           pad(fmt("%.0f", median(totals)), 16, true) + "\n";
  }
  out += pad("Total (MAX parallel sub-pipelines)", 90) +
         pad(fmt("%.0f", report.parallel_total), 16, true) + "\n\n";
  out += "Reduction of required requests: " + fmt("%.2f", report.reduction_pct) + " %\n";
  out += "Reduction counting routed requests only: " +
         fmt("%.2f", report.reduction_pct_until_significant) + " %\n";
  if (!report.split_fractions.empty()) {
    out += "Split fractions (median):";
    for (const auto& [sub, f] : report.split_fractions) {
      out += " " + sub + " " + fmt("%.4f", median(f));
    }
    out += " unrouted " + fmt("%.4f", median(report.unrouted_fractions)) + "\n";
  }
  if (report.partial()) {
    out += "\nPARTIAL REPORT, failed runs:\n";
    for (const auto& f : report.failures) out += "  " + f + "\n";
  }
  out +=
      "\nReference at full production scale: sequential 27,000 (review) + 112,000 "
      "(recommendation) = 139,000; parallel 26,000 (review) / 1,000 (recommendation), "
      "total 27,128; reduction 80.48 %.\n";
  return out;
}

void write_compare_outputs(const fs::path& out_dir, const Comparison& comparison) {
  fs::create_directories(out_dir / "pvalues");
  write_text(out_dir / "report.json", report_json(comparison.report));
  write_text(out_dir / "report.txt", report_text(comparison.report));
  auto write_medians = [&](const std::string& kind, const std::vector<ScenarioRun>& runs) {
    std::map<std::string, std::map<std::uint64_t, std::vector<double>>> by_test;
    for (const auto& run : runs) {
      if (!run.ok()) continue;
      for (const auto& [key, o] : run.result.outcomes) {
        for (const auto& c : o.checkpoints) by_test[key][c.requests_consumed].push_back(c.p_value);
      }
    }
    for (const auto& [key, rows] : by_test) {
      std::string csv = "requests,median_p_value,runs\n";
      for (const auto& [requests, ps] : rows) {
        csv += std::to_string(requests) + "," + format_double(median(ps)) + "," +
               std::to_string(ps.size()) + "\n";
      }
      write_text(out_dir / "pvalues" / (kind + "__" + file_key(key) + ".csv"), csv);
    }
  };
  write_medians("sequential", comparison.sequential);
  write_medians("parallel", comparison.parallel);
}

}  // namespace abpipe::cli
