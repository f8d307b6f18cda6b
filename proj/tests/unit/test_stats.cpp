#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "abpipe/stats/accumulator.hpp"
#include "abpipe/stats/distributions.hpp"
#include "abpipe/stats/hypothesis.hpp"

using namespace abpipe::stats;

namespace {

struct OracleCase {
  int id;
  MetricAccumulator a, b;
  Direction direction;
  double p;
};

std::vector<OracleCase> load_oracle() {
  std::ifstream in(std::string(ABPIPE_SOURCE_DIR) + "/tests/data/welch_oracle.csv");
  std::string line;
  std::getline(in, line);
  std::vector<OracleCase> cases;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    OracleCase oc;
    oc.id = std::stoi(cells[0]);
    oc.a = MetricAccumulator::from_moments(std::stoull(cells[1]), std::stod(cells[2]),
                                           std::stod(cells[3]));
    oc.b = MetricAccumulator::from_moments(std::stoull(cells[4]), std::stod(cells[5]),
                                           std::stod(cells[6]));
    oc.direction = *parse_direction(cells[7]);
    oc.p = std::stod(cells[8]);
    cases.push_back(oc);
  }
  return cases;
}

}  // namespace

TEST(WelchOracle, HundredCasesWithin1e9) {
  const auto cases = load_oracle();
  ASSERT_EQ(cases.size(), 100u);
  for (const auto& c : cases) {
    const auto r = welch_t_test(c.a, c.b, c.direction);
    EXPECT_NEAR(r.p_value, c.p, 1e-9) << "case " << c.id;
  }
}

TEST(Distributions, StudentCdfMatchesBoost) {
  for (double df : {1.0, 2.5, 7.0, 30.0, 311.7, 2e4, 3e5}) {
    boost::math::students_t dist(df);
    for (double t : {-40.0, -6.0, -2.0, -0.3, 0.0, 0.7, 1.96, 4.5, 12.0}) {
      const double expected = boost::math::cdf(dist, t);
      EXPECT_NEAR(student_t_cdf(t, df), expected, 1e-12) << "df=" << df << " t=" << t;
      const double upper = boost::math::cdf(boost::math::complement(dist, t));
      EXPECT_NEAR(student_t_upper_tail(t, df), upper, std::max(1e-14, 1e-9 * upper));
    }
  }
}

TEST(Distributions, IncompleteBetaMatchesBoost) {
  for (double a : {0.5, 1.0, 3.0, 50.0, 4e4}) {
    for (double b : {0.5, 2.0, 10.0, 4e4}) {
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0}) {
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-11)
            << a << " " << b << " " << x;
      }
    }
  }
}

TEST(Distributions, NormalTailsMatchBoost) {
  boost::math::normal n;
  for (double z : {-8.0, -1.5, 0.0, 0.4, 2.94, 9.0}) {
    EXPECT_NEAR(normal_cdf(z), boost::math::cdf(n, z), 1e-15);
    const double up = boost::math::cdf(boost::math::complement(n, z));
    EXPECT_NEAR(normal_upper_tail(z), up, std::max(1e-16, 1e-12 * up));
  }
}

// With equal sizes and equal variances Welch's statistic is Student's pooled
// statistic and the Welch-Satterthwaite df collapses to 2n - 2.
TEST(Welch, DegeneratesToStudent) {
  for (std::uint64_t n : {5u, 40u, 1000u}) {
    const auto a = MetricAccumulator::from_moments(n, 1.0, 2.0 * (n - 1));
    const auto b = MetricAccumulator::from_moments(n, 1.3, 2.0 * (n - 1));
    const auto w = welch_statistic(a, b);
    EXPECT_NEAR(w.df, 2.0 * n - 2.0, 1e-9 * n);
    const double sp2 = (a.m2() + b.m2()) / (2.0 * n - 2.0);
    const double t_student = (b.mean() - a.mean()) / std::sqrt(sp2 * 2.0 / n);
    EXPECT_NEAR(w.t, t_student, 1e-12);
    const auto r = welch_t_test(a, b, Direction::BNotEqual);
    boost::math::students_t dist(2.0 * n - 2.0);
    const double p_student = 2.0 * boost::math::cdf(boost::math::complement(dist, t_student));
    EXPECT_NEAR(r.p_value, p_student, 1e-12);
  }
}

TEST(Welch, ZeroVarianceIsDefined) {
  const auto a = MetricAccumulator::from_moments(10, 0.0, 0.0);
  const auto same = MetricAccumulator::from_moments(10, 0.0, 0.0);
  const auto higher = MetricAccumulator::from_moments(10, 1.0, 0.0);
  EXPECT_EQ(welch_t_test(a, same, Direction::BGreater).p_value, 1.0);
  EXPECT_EQ(welch_t_test(a, higher, Direction::BGreater).p_value, 0.0);
  EXPECT_EQ(welch_t_test(a, higher, Direction::BLess).p_value, 1.0);
}

TEST(Welch, RejectsTooFewSamples) {
  const auto one = MetricAccumulator::from_moments(1, 0.3, 0.0);
  const auto many = MetricAccumulator::from_moments(50, 0.3, 4.0);
  try {
    welch_t_test(one, many, Direction::BGreater);
    FAIL();
  } catch (const StatsError& e) {
    EXPECT_EQ(e.kind(), StatsErrorKind::InsufficientSamples);
  }
}

TEST(TwoProportion, ReviewClickRatesAtTenThousand) {
  const auto a = MetricAccumulator::from_proportion(10000, 1470);
  const auto b = MetricAccumulator::from_proportion(10000, 1617);
  const auto r = two_proportion_test(a, b, Direction::BGreater);
  // pooled z: (0.1617 - 0.1470) / sqrt(p(1-p)(2/10000)), p = 0.15435
  const double p = 0.15435;
  const double z = (0.1617 - 0.1470) / std::sqrt(p * (1 - p) * 2e-4);
  EXPECT_NEAR(r.statistic, z, 1e-9);
  EXPECT_LT(r.p_value, 0.05);
  EXPECT_TRUE(r.significant);
}

TEST(TwoProportion, RejectsNonBinary) {
  MetricAccumulator a, b;
  for (double x : {0.0, 1.0, 0.5}) a.add(x);
  for (double x : {0.0, 1.0, 1.0}) b.add(x);
  try {
    two_proportion_test(a, b, Direction::BGreater);
    FAIL();
  } catch (const StatsError& e) {
    EXPECT_EQ(e.kind(), StatsErrorKind::NonBinarySamples);
  }
}

TEST(Accumulator, RejectsNonFinite) {
  MetricAccumulator a;
  EXPECT_THROW(a.add(std::nan("")), StatsError);
  EXPECT_THROW(a.add(INFINITY), StatsError);
  EXPECT_EQ(a.count(), 0u);
}

// Property: merging any partition equals accumulating the whole stream.
TEST(Accumulator, MergeOfPartitionsEqualsWhole) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> draw(3.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 500;
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw(rng);
    MetricAccumulator whole;
    for (double x : xs) whole.add(x);
    MetricAccumulator merged;
    std::size_t i = 0;
    while (i < n) {
      const std::size_t len = 1 + rng() % 60;
      MetricAccumulator part;
      for (std::size_t k = i; k < std::min(n, i + len); ++k) part.add(xs[k]);
      merged.merge(part);
      i += len;
    }
    EXPECT_EQ(merged.count(), whole.count());
    EXPECT_NEAR(merged.mean(), whole.mean(), 1e-12);
    EXPECT_NEAR(merged.m2(), whole.m2(), 1e-9 * whole.m2());
  }
}

// Property: the p-value is a probability and the one-sided tails partition it.
TEST(Welch, OneSidedTailsSumToOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = MetricAccumulator::from_moments(2 + rng() % 5000, u(rng), u(rng) * 100);
    const auto b = MetricAccumulator::from_moments(2 + rng() % 5000, u(rng), u(rng) * 100);
    const double g = welch_t_test(a, b, Direction::BGreater).p_value;
    const double l = welch_t_test(a, b, Direction::BLess).p_value;
    const double two = welch_t_test(a, b, Direction::BNotEqual).p_value;
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0);
    EXPECT_NEAR(g + l, 1.0, 1e-12);
    EXPECT_NEAR(two, 2.0 * std::min(g, l), 1e-12);
  }
}
