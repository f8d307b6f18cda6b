#include "abpipe/stats/monitor.hpp"

#include <algorithm>
#include <ostream>

#include "abpipe/format.hpp"

namespace abpipe::stats {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Continue:
      return "continue";
    case Verdict::Significant:
      return "significant";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

SequentialMonitor::SequentialMonitor(MonitorConfig config) : config_(std::move(config)) {
  if (config_.batch_size < 1) {
    throw StatsError(StatsErrorKind::InvalidArgument, "batch size must be at least 1");
  }
  if (config_.exp_length < 1) {
    throw StatsError(StatsErrorKind::InvalidArgument, "experiment length must be at least 1");
  }
  if (!(config_.alpha > 0.0 && config_.alpha < 1.0)) {
    throw StatsError(StatsErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
}

bool SequentialMonitor::is_checkpoint(std::uint64_t requests) const {
  if (requests == 0 || requests > config_.exp_length) return false;
  return requests % config_.batch_size == 0 || requests == config_.exp_length;
}

std::uint64_t SequentialMonitor::next_checkpoint(std::uint64_t requests) const {
  const std::uint64_t next = (requests / config_.batch_size + 1) * config_.batch_size;
  return std::min(next, config_.exp_length);
}

MonitorStep SequentialMonitor::evaluate(const MetricAccumulator& a, const MetricAccumulator& b,
                                        std::uint64_t requests) const {
  MonitorStep step;
  try {
    step.result = run_test(config_.kind, a, b, config_.direction, config_.alpha);
  } catch (const StatsError& e) {
    if (e.kind() != StatsErrorKind::InsufficientSamples &&
        e.kind() != StatsErrorKind::DegenerateProportion) {
      throw;
    }
    step.result = StatResult{};
    step.result.mean_a = a.mean();
    step.result.mean_b = b.mean();
    step.result.n_a = a.count();
    step.result.n_b = b.count();
  }
  step.result.test_name = config_.test_name;
  step.result.requests_consumed = requests;
  if (step.result.significant) {
    step.verdict = Verdict::Significant;
  } else if (requests >= config_.exp_length) {
    step.verdict = Verdict::Inconclusive;
  }
  return step;
}

std::vector<StatResult> sequential_monitor(const MonitorConfig& config, const SampleSource& next) {
  const SequentialMonitor monitor(config);
  MetricAccumulator acc[2];
  std::vector<StatResult> out;
  for (std::uint64_t requests = 1;; ++requests) {
    const auto [variant, sample] = next();
    acc[variant == Variant::A ? 0 : 1].add(sample);
    if (!monitor.is_checkpoint(requests)) continue;
    MonitorStep step = monitor.evaluate(acc[0], acc[1], requests);
    out.push_back(step.result);
    if (step.verdict != Verdict::Continue) break;
  }
  return out;
}

void write_pvalue_csv(std::ostream& out, const std::vector<StatResult>& trace) {
  out << "requests,p_value,mean_a,mean_b,n_a,n_b,significant\n";
  for (const auto& r : trace) {
    out << r.requests_consumed << ',' << format_double(r.p_value) << ','
        << format_double(r.mean_a) << ',' << format_double(r.mean_b) << ',' << r.n_a << ','
        << r.n_b << ',' << (r.significant ? "true" : "false") << '\n';
  }
}

}  // namespace abpipe::stats
