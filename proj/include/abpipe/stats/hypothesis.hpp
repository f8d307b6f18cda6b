#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "abpipe/stats/accumulator.hpp"

namespace abpipe::stats {

// Alternative hypothesis, always phrased as "B compared to A".
enum class Direction { BGreater, BLess, BNotEqual };

enum class StatTestKind { WelchT, TwoProportion };

std::string_view to_string(Direction d);
std::string_view to_string(StatTestKind k);
std::optional<Direction> parse_direction(std::string_view text);
std::optional<StatTestKind> parse_stat_test(std::string_view text);

struct StatResult {
  std::string test_name;
  double p_value = 1.0;
  double statistic = 0.0;  // t or z
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  bool significant = false;
  std::uint64_t requests_consumed = 0;

  // mean_b - mean_a
  double effect() const { return mean_b - mean_a; }

  friend bool operator==(const StatResult&, const StatResult&) = default;
};

struct WelchStatistic {
  double t = 0.0;
  double df = 0.0;
};

/// Welch's t statistic and Welch-Satterthwaite degrees of freedom.
/// Requires n >= 2 on both sides and at least one non-zero variance.
WelchStatistic welch_statistic(const MetricAccumulator& a, const MetricAccumulator& b);

/// Welch's unequal-variance t-test of B against A.
///
/// Throws StatsError{InsufficientSamples} when either side has fewer than two
/// samples. When both variances are zero the p-value is defined rather than
/// computed: 1 when the means are equal or differ against the hypothesised
/// direction, 0 otherwise.
StatResult welch_t_test(const MetricAccumulator& a, const MetricAccumulator& b,
                        Direction direction, double alpha = 0.05);

/// Pooled two-proportion z-test. Both accumulators must hold only 0/1 samples.
StatResult two_proportion_test(const MetricAccumulator& a, const MetricAccumulator& b,
                               Direction direction, double alpha = 0.05);

StatResult run_test(StatTestKind kind, const MetricAccumulator& a, const MetricAccumulator& b,
                    Direction direction, double alpha);

}  // namespace abpipe::stats
