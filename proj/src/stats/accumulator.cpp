#include "abpipe/stats/accumulator.hpp"

#include <cmath>

namespace abpipe::stats {

MetricAccumulator MetricAccumulator::from_moments(std::uint64_t n, double mean, double m2,
                                                  bool binary) {
  if (!std::isfinite(mean) || !std::isfinite(m2) || m2 < 0.0) {
    throw StatsError(StatsErrorKind::InvalidArgument, "accumulator moments must be finite, m2 >= 0");
  }
  MetricAccumulator acc;
  if (n == 0) return acc;
  acc.n_ = n;
  acc.mean_ = mean;
  acc.m2_ = m2;
  acc.binary_ = binary;
  return acc;
}

MetricAccumulator MetricAccumulator::from_proportion(std::uint64_t n, std::uint64_t successes) {
  if (successes > n) {
    throw StatsError(StatsErrorKind::InvalidArgument, "successes exceed trials");
  }
  if (n == 0) return {};
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  return from_moments(n, p, static_cast<double>(successes) * (1.0 - p), true);
}

void MetricAccumulator::add(double sample) {
  if (!std::isfinite(sample)) {
    throw StatsError(StatsErrorKind::NonFiniteSample, "non-finite sample rejected");
  }
  ++n_;
  const double delta = sample - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (sample - mean_);
  if (m2_ < 0.0) m2_ = 0.0;
  if (sample != 0.0 && sample != 1.0) binary_ = false;
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
  binary_ = binary_ && other.binary_;
}

double MetricAccumulator::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

}  // namespace abpipe::stats
