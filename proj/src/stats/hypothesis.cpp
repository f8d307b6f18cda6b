#include "abpipe/stats/hypothesis.hpp"

#include <algorithm>
#include <cmath>

#include "abpipe/stats/distributions.hpp"

namespace abpipe::stats {
namespace {

StatResult base_result(const MetricAccumulator& a, const MetricAccumulator& b) {
  StatResult r;
  r.mean_a = a.mean();
  r.mean_b = b.mean();
  r.n_a = a.count();
  r.n_b = b.count();
  r.requests_consumed = a.count() + b.count();
  return r;
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

double degenerate_p_value(double diff, Direction direction) {
  if (diff == 0.0) return 1.0;
  switch (direction) {
    case Direction::BGreater:
      return diff > 0.0 ? 0.0 : 1.0;
    case Direction::BLess:
      return diff < 0.0 ? 0.0 : 1.0;
    case Direction::BNotEqual:
      return 0.0;
  }
  return 1.0;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw StatsError(StatsErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::BGreater:
      return "B_greater";
    case Direction::BLess:
      return "B_less";
    case Direction::BNotEqual:
      return "B_not_equal";
  }
  return "?";
}

std::string_view to_string(StatTestKind k) {
  return k == StatTestKind::WelchT ? "welch_t" : "two_proportion";
}

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "B_greater") return Direction::BGreater;
  if (text == "B_less") return Direction::BLess;
  if (text == "B_not_equal") return Direction::BNotEqual;
  return std::nullopt;
}

std::optional<StatTestKind> parse_stat_test(std::string_view text) {
  if (text == "welch_t") return StatTestKind::WelchT;
  if (text == "two_proportion") return StatTestKind::TwoProportion;
  return std::nullopt;
}

WelchStatistic welch_statistic(const MetricAccumulator& a, const MetricAccumulator& b) {
  if (a.count() < 2 || b.count() < 2) {
    throw StatsError(StatsErrorKind::InsufficientSamples,
                     "welch t-test needs at least two samples per variant");
  }
  const double na = static_cast<double>(a.count());
  const double nb = static_cast<double>(b.count());
  const double qa = a.variance() / na;
  const double qb = b.variance() / nb;
  const double se2 = qa + qb;
  if (!(se2 > 0.0)) {
    throw StatsError(StatsErrorKind::InvalidArgument, "both variances are zero");
  }
  WelchStatistic w;
  w.t = (b.mean() - a.mean()) / std::sqrt(se2);
  w.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  return w;
}

StatResult welch_t_test(const MetricAccumulator& a, const MetricAccumulator& b,
                        Direction direction, double alpha) {
  check_alpha(alpha);
  if (a.count() < 2 || b.count() < 2) {
    throw StatsError(StatsErrorKind::InsufficientSamples,
                     "welch t-test needs at least two samples per variant");
  }
  StatResult r = base_result(a, b);
  if (a.variance() == 0.0 && b.variance() == 0.0) {
    r.p_value = degenerate_p_value(b.mean() - a.mean(), direction);
  } else {
    const WelchStatistic w = welch_statistic(a, b);
    r.statistic = w.t;
    switch (direction) {
      case Direction::BGreater:
        r.p_value = student_t_upper_tail(w.t, w.df);
        break;
      case Direction::BLess:
        r.p_value = student_t_cdf(w.t, w.df);
        break;
      case Direction::BNotEqual:
        r.p_value = 2.0 * student_t_upper_tail(std::fabs(w.t), w.df);
        break;
    }
  }
  r.p_value = clamp_probability(r.p_value);
  r.significant = r.p_value <= alpha;
  return r;
}

StatResult two_proportion_test(const MetricAccumulator& a, const MetricAccumulator& b,
                               Direction direction, double alpha) {
  check_alpha(alpha);
  if (!a.binary() || !b.binary()) {
    throw StatsError(StatsErrorKind::NonBinarySamples,
                     "two-proportion test requires 0/1 samples");
  }
  if (a.count() < 1 || b.count() < 1) {
    throw StatsError(StatsErrorKind::InsufficientSamples,
                     "two-proportion test needs at least one sample per variant");
  }
  const double na = static_cast<double>(a.count());
  const double nb = static_cast<double>(b.count());
  const double pooled = (a.mean() * na + b.mean() * nb) / (na + nb);
  if (pooled <= 0.0 || pooled >= 1.0) {
    throw StatsError(StatsErrorKind::DegenerateProportion,
                     "pooled proportion is 0 or 1; the z statistic is undefined");
  }
  StatResult r = base_result(a, b);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
  const double z = (b.mean() - a.mean()) / se;
  r.statistic = z;
  switch (direction) {
    case Direction::BGreater:
      r.p_value = normal_upper_tail(z);
      break;
    case Direction::BLess:
      r.p_value = normal_cdf(z);
      break;
    case Direction::BNotEqual:
      r.p_value = 2.0 * normal_upper_tail(std::fabs(z));
      break;
  }
  r.p_value = clamp_probability(r.p_value);
  r.significant = r.p_value <= alpha;
  return r;
}

StatResult run_test(StatTestKind kind, const MetricAccumulator& a, const MetricAccumulator& b,
                    Direction direction, double alpha) {
  return kind == StatTestKind::WelchT ? welch_t_test(a, b, direction, alpha)
                                      : two_proportion_test(a, b, direction, alpha);
}

}  // namespace abpipe::stats
