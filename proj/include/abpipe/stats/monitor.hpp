#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "abpipe/stats/hypothesis.hpp"

namespace abpipe::stats {

inline constexpr std::uint64_t kDefaultBatchSize = 1000;

struct MonitorConfig {
  std::string test_name;
  StatTestKind kind = StatTestKind::WelchT;
  Direction direction = Direction::BGreater;
  double alpha = 0.05;
  std::uint64_t exp_length = 1;
  std::uint64_t batch_size = kDefaultBatchSize;
};

enum class Verdict { Continue, Significant, Inconclusive };

std::string_view to_string(Verdict v);

struct MonitorStep {
  StatResult result;
  Verdict verdict = Verdict::Continue;
};

// Decides at batch boundaries whether a running test may stop: at the first
// checkpoint with p <= alpha, or at the length cap. Checkpoints fall at
// k * batch_size, and at exp_length when that is not a multiple of the batch.
//
// A checkpoint where the test cannot be computed yet (too few samples, zero
// variance on a proportion) counts as p = 1.
class SequentialMonitor {
 public:
  explicit SequentialMonitor(MonitorConfig config);

  const MonitorConfig& config() const { return config_; }
  bool is_checkpoint(std::uint64_t requests) const;
  // Next checkpoint strictly after `requests`.
  std::uint64_t next_checkpoint(std::uint64_t requests) const;
  MonitorStep evaluate(const MetricAccumulator& a, const MetricAccumulator& b,
                       std::uint64_t requests) const;

 private:
  MonitorConfig config_;
};

// One routed request: the variant it saw and its metric sample.
using SampleSource = std::function<std::pair<Variant, double>()>;

// Pulls requests from `next` until the monitor stops and returns one result per
// checkpoint. The last result is significant or hits the cap.
std::vector<StatResult> sequential_monitor(const MonitorConfig& config, const SampleSource& next);

// requests,p_value,mean_a,mean_b,n_a,n_b,significant
void write_pvalue_csv(std::ostream& out, const std::vector<StatResult>& trace);

}  // namespace abpipe::stats
