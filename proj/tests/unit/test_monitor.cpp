#include <sstream>

#include <gtest/gtest.h>

#include "abpipe/rng.hpp"
#include "abpipe/stats/monitor.hpp"

using namespace abpipe::stats;

TEST(Monitor, CheckpointsAtBatchMultiplesAndCap) {
  SequentialMonitor m({"t", StatTestKind::WelchT, Direction::BGreater, 0.05, 2500, 1000});
  EXPECT_FALSE(m.is_checkpoint(999));
  EXPECT_TRUE(m.is_checkpoint(1000));
  EXPECT_TRUE(m.is_checkpoint(2000));
  EXPECT_TRUE(m.is_checkpoint(2500));
  EXPECT_EQ(m.next_checkpoint(0), 1000u);
  EXPECT_EQ(m.next_checkpoint(2000), 2500u);
}

TEST(Monitor, StopsAtFirstSignificantCheckpoint) {
  abpipe::SplitMix64 rng(3);
  std::uint64_t i = 0;
  const auto trace = sequential_monitor(
      {"t", StatTestKind::WelchT, Direction::BGreater, 0.05, 150000, 1000}, [&]() {
        const Variant v = (i++ % 2) ? Variant::B : Variant::A;
        const double rate = v == Variant::A ? 0.10 : 0.20;
        return std::make_pair(v, rng.uniform() < rate ? 1.0 : 0.0);
      });
  ASSERT_FALSE(trace.empty());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    EXPECT_EQ(trace[k].requests_consumed, 1000 * (k + 1));
    if (k + 1 < trace.size()) EXPECT_GT(trace[k].p_value, 0.05);
  }
  EXPECT_TRUE(trace.back().significant);
  EXPECT_LE(trace.back().p_value, 0.05);
}

TEST(Monitor, NullEffectRunsToCap) {
  abpipe::SplitMix64 rng(5);
  std::uint64_t i = 0;
  const auto trace = sequential_monitor(
      {"t", StatTestKind::WelchT, Direction::BGreater, 1e-9, 3500, 1000}, [&]() {
        const Variant v = (i++ % 2) ? Variant::B : Variant::A;
        return std::make_pair(v, rng.uniform() < 0.3 ? 1.0 : 0.0);
      });
  ASSERT_EQ(trace.size(), 4u);
  EXPECT_EQ(trace.back().requests_consumed, 3500u);
  EXPECT_FALSE(trace.back().significant);
}

TEST(Monitor, UncomputableCheckpointCountsAsOne) {
  SequentialMonitor m({"t", StatTestKind::TwoProportion, Direction::BGreater, 0.05, 10, 10});
  const auto zeros = MetricAccumulator::from_proportion(5, 0);
  const auto step = m.evaluate(zeros, zeros, 10);
  EXPECT_EQ(step.result.p_value, 1.0);
  EXPECT_EQ(step.verdict, Verdict::Inconclusive);
}

TEST(Monitor, PValueCsvLayout) {
  StatResult r;
  r.p_value = 0.25;
  r.mean_a = 0.1;
  r.mean_b = 0.2;
  r.n_a = 500;
  r.n_b = 500;
  r.requests_consumed = 1000;
  std::ostringstream out;
  write_pvalue_csv(out, {r});
  EXPECT_EQ(out.str(), "requests,p_value,mean_a,mean_b,n_a,n_b,significant\n"
                       "1000,0.25,0.1,0.2,500,500,false\n");
}
