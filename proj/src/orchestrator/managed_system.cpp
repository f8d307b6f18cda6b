#include "abpipe/orchestrator/managed_system.hpp"

namespace abpipe::orchestrator {

MonitorAnalyzer::MonitorAnalyzer(std::uint64_t batch_size) : batch_size_(batch_size) {
  if (batch_size_ < 1) {
    throw stats::StatsError(stats::StatsErrorKind::InvalidArgument, "batch size must be >= 1");
  }
}

stats::MonitorConfig MonitorAnalyzer::config_for(const pipeline::ABTestSpec& test,
                                                 std::uint64_t batch_size) {
  stats::MonitorConfig c;
  c.test_name = test.name;
  c.kind = test.stat_test;
  c.direction = test.hypothesis.direction;
  c.alpha = test.hypothesis.alpha;
  c.exp_length = test.exp_length;
  c.batch_size = batch_size;
  return c;
}

bool MonitorAnalyzer::is_checkpoint(const pipeline::ABTestSpec& test,
                                    std::uint64_t requests) const {
  if (requests == 0 || requests > test.exp_length) return false;
  return requests % batch_size_ == 0 || requests == test.exp_length;
}

stats::MonitorStep MonitorAnalyzer::analyze(const pipeline::ABTestSpec& test, const Probe& probe) {
  const stats::SequentialMonitor monitor(config_for(test, batch_size_));
  return monitor.evaluate(probe.a, probe.b, probe.requests);
}

}  // namespace abpipe::orchestrator
