#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace abpipe::stats {

enum class Variant { A, B };

inline const char* to_string(Variant v) { return v == Variant::A ? "A" : "B"; }

enum class StatsErrorKind {
  NonFiniteSample,
  InsufficientSamples,
  NonBinarySamples,
  DegenerateProportion,
  InvalidArgument,
};

class StatsError : public std::invalid_argument {
 public:
  StatsError(StatsErrorKind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}
  StatsErrorKind kind() const noexcept { return kind_; }

 private:
  StatsErrorKind kind_;
};

// Single-pass mean / variance accumulator (Welford update, Chan et al. merge).
class MetricAccumulator {
 public:
  MetricAccumulator() = default;

  // Rebuilds an accumulator from its moments. `binary` records whether every
  // underlying sample was 0 or 1.
  static MetricAccumulator from_moments(std::uint64_t n, double mean, double m2,
                                        bool binary = false);
  // k successes out of n binary trials.
  static MetricAccumulator from_proportion(std::uint64_t n, std::uint64_t successes);

  void add(double sample);
  void merge(const MetricAccumulator& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  // Sample variance m2 / (n - 1); zero for n < 2.
  double variance() const;
  bool binary() const { return binary_; }

  friend bool operator==(const MetricAccumulator&, const MetricAccumulator&) = default;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  bool binary_ = true;
};

}  // namespace abpipe::stats
