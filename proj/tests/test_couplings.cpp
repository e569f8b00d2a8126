#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "scripted_noise.hpp"
#include "ubmc/couplings.hpp"
#include "ubmc/errors.hpp"
#include "ubmc/models/circle.hpp"
#include "ubmc/models/contracting_normals.hpp"
#include "ubmc/schedule.hpp"
#include "ubmc/stats.hpp"

using namespace ubmc;
using models::CircleChain;
using models::ContractingNormals;

namespace {

double identity(double x) { return x; }

/// State recording which draws of the stream moved it.
struct Trace {
  std::vector<double> used;
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct TraceKernel {
  template <class R>
  Trace operator()(const Trace& t, R& rng) const {
    Trace out = t;
    out.used.push_back(rng.normal());
    return out;
  }
  template <class R>
  std::pair<Trace, Trace> operator()(const Trace& x, const Trace& y, R& rng) const {
    const double w = rng.normal();
    Trace a = x, b = y;
    a.used.push_back(w);
    b.used.push_back(w);
    return {a, b};
  }
};

}  // namespace

TEST(Schedule, AffineAndInvariants) {
  const auto s = LevelSchedule::affine(4, 4, 5);
  EXPECT_EQ(s.steps(0), 4u);
  EXPECT_EQ(s.steps(4), 20u);
  EXPECT_FALSE(s.transdimensional());
  EXPECT_THROW(static_cast<void>(s.steps(5)), std::out_of_range);
  EXPECT_THROW(LevelSchedule({0, 1}), ValidationError);
  EXPECT_THROW(LevelSchedule({2, 2}), ValidationError);
  EXPECT_THROW(LevelSchedule({1, 2}, {3, 2}), ValidationError);
  const LevelSchedule t({1, 2, 3}, {1, 1, 5, 9});
  EXPECT_TRUE(t.transdimensional());
  EXPECT_EQ(t.dims().size(), 3u);
  EXPECT_EQ(t.dim(2), 5u);
}

TEST(Schedule, StrictlyIncreasingCeil) {
  const std::vector<double> raw = {0.2, 1.0, 1.5, 1.7, 10.0};
  const std::vector<std::uint64_t> want = {1, 2, 3, 4, 10};
  EXPECT_EQ(strictly_increasing_ceil(raw), want);
}

TEST(CoupledContraction, ZeroNoiseKeepsBothChainsAtZero) {
  const ContractingNormals cn(0.8);
  const auto sched = LevelSchedule::affine(4, 4, 6);
  for (std::size_t i = 1; i < 6; ++i) {
    ScriptedNoise zero({}, std::vector<double>(100, 0.0));
    const auto d = coupled_contraction_delta<double>(cn, cn, sched, i, 0.0, identity, zero);
    EXPECT_EQ(d.delta, 0.0);
    EXPECT_EQ(zero.normals_used(), sched.steps(i));
  }
}

TEST(CoupledContraction, HandSimulatedLevelOne) {
  const ContractingNormals cn(0.5);
  const LevelSchedule sched({1, 2});
  ScriptedNoise noise({}, {1.0, 1.0});
  const auto d = coupled_contraction_delta<double>(cn, cn, sched, 1, 0.0, identity, noise);
  EXPECT_NEAR(d.delta, 0.5 * std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(d.delta, 0.43301, 1e-5);
  EXPECT_DOUBLE_EQ(d.work, 2.0);
}

TEST(CoupledContraction, LevelZeroRunsA0Steps) {
  const ContractingNormals cn(0.5);
  const LevelSchedule sched({3, 5});
  ScriptedNoise noise({}, {1.0, 0.0, 0.0});
  const auto d = coupled_contraction_delta<double>(cn, cn, sched, 0, 0.0, identity, noise);
  EXPECT_NEAR(d.delta, 0.25 * std::sqrt(0.75), 1e-15);
  EXPECT_DOUBLE_EQ(d.work, 3.0);
}

TEST(CoupledContraction, BottomChainSharesFinalTopRandomness) {
  const LevelSchedule sched({2, 5, 9});
  Trace top, bottom;
  auto f = [&](const Trace& t) {
    (t.used.size() == 9 ? top : bottom) = t;
    return 0.0;
  };
  CountingNoise noise;
  static_cast<void>(coupled_contraction_delta<double>(TraceKernel{}, TraceKernel{}, sched, 2, Trace{}, f, noise));
  ASSERT_EQ(top.used.size(), 9u);
  ASSERT_EQ(bottom.used.size(), 5u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(top.used[k], static_cast<double>(k));
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(bottom.used[k], top.used[4 + k]);
  EXPECT_EQ(noise.used(), 9u);
}

TEST(CoupledContraction, LevelRmsFollowsContraction) {
  const double rho = 0.8;
  const ContractingNormals cn(rho);
  const auto sched = LevelSchedule::affine(4, 4, 4);
  auto rms = [&](std::size_t level, std::uint64_t seed) {
    std::vector<double> sq(100000);
    const auto root = StreamKey::root(seed);
    for (std::size_t r = 0; r < sq.size(); ++r) {
      Stream rng(root.replicate(r));
      const double d = coupled_contraction_delta<double>(cn, cn, sched, level, 0.0, identity, rng).delta;
      sq[r] = d * d;
    }
    const auto m = stats::moments(sq);
    return std::pair{std::sqrt(m.mean), m.standard_error() / (2.0 * std::sqrt(m.mean))};
  };
  const auto [pilot, pilot_se] = rms(1, 1);
  const double c = pilot / std::pow(rho, 4.0);
  const auto [level2, level2_se] = rms(2, 2);
  const double bound = c * std::pow(rho, 8.0);
  EXPECT_LE(level2, bound + 4.0 * (level2_se + pilot_se * std::pow(rho, 4.0)));
}

TEST(MinorizedStep, NearOneLambdaReturnsNu) {
  Stream rng(StreamKey::root(3));
  auto nu = [](Stream& r) { return r.normal(); };
  auto residual = [](double x, Stream&) { return x + 100.0; };
  std::vector<double> xs(20000);
  for (double& x : xs) x = minorized_step(1.0 - 1e-12, nu, residual, 5.0, rng);
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  EXPECT_GT(stats::ks_one_sample(xs, cdf).p_value, 1e-3);
}

TEST(MinorizedStep, BernoulliMixtureFrequencies) {
  Stream rng(StreamKey::root(4));
  auto nu = [](Stream&) { return 7.0; };
  auto residual = [](double x, Stream&) { return x; };
  constexpr int draws = 100000;
  int sevens = 0;
  for (int k = 0; k < draws; ++k) {
    const double x = minorized_step(0.5, nu, residual, 3.0, rng);
    ASSERT_TRUE(x == 7.0 || x == 3.0);
    sevens += x == 7.0;
  }
  EXPECT_NEAR(sevens / static_cast<double>(draws), 0.5, 4.0 * std::sqrt(0.25 / draws));
}

TEST(MinorizedStep, CoalescenceProbability) {
  const double lambda = 0.2;
  constexpr int n = 5, trials = 50000;
  auto nu = [](Stream& r) { return r.normal(); };
  auto residual = [](double x, Stream& r) { return 0.5 * x + r.normal(); };
  int met = 0;
  for (int t = 0; t < trials; ++t) {
    Stream rng(StreamKey::root(5).replicate(static_cast<std::uint64_t>(t)));
    double x = -3.0, y = 4.0;
    for (int k = 0; k < n; ++k) std::tie(x, y) = minorized_coupled_step(lambda, nu, residual, x, y, rng);
    met += x == y;
  }
  const double p = 1.0 - std::pow(1.0 - lambda, n);
  const double freq = met / static_cast<double>(trials);
  EXPECT_GE(freq, p - 4.0 * std::sqrt(p * (1.0 - p) / trials));
}

TEST(MinorizedStep, RejectsLambdaOutsideUnitInterval) {
  Stream rng(StreamKey::root(6));
  auto nu = [](Stream&) { return 0.0; };
  auto residual = [](double x, Stream&) { return x; };
  EXPECT_THROW(static_cast<void>(minorized_step(1.0, nu, residual, 0.0, rng)), ValidationError);
  EXPECT_THROW(static_cast<void>(minorized_step(0.0, nu, residual, 0.0, rng)), ValidationError);
}

TEST(EstimateContraction, ContractingNormalsSlopeIsLogRho) {
  const ContractingNormals cn(0.5);
  const std::vector<std::pair<double, double>> pairs = {{0.0, 1.0}, {-2.0, 3.0}};
  auto d = [](double x, double y) { return std::abs(x - y); };
  const auto fit = estimate_contraction<double>(cn, d, pairs, 20, 10, 7);
  EXPECT_NEAR(fit.slope, std::log(0.5), 0.05);
  EXPECT_EQ(fit.fitted_steps, 20u);
}

TEST(EstimateContraction, IdentityCouplingHasZeroSlope) {
  auto identity_coupling = [](double x, double y, Stream&) { return std::pair{x, y}; };
  const std::vector<std::pair<double, double>> pairs = {{0.0, 1.0}};
  auto d = [](double x, double y) { return std::abs(x - y); };
  const auto fit = estimate_contraction<double>(identity_coupling, d, pairs, 10, 3, 8);
  EXPECT_NEAR(fit.slope, 0.0, 1e-12);
}

TEST(EstimateContraction, RejectsDiagonalPairs) {
  const ContractingNormals cn(0.5);
  const std::vector<std::pair<double, double>> pairs = {{1.0, 1.0}};
  auto d = [](double x, double y) { return std::abs(x - y); };
  EXPECT_THROW(static_cast<void>(estimate_contraction<double>(cn, d, pairs, 10, 3, 9)), ValidationError);
}

TEST(EstimateContraction, CircleMeetingCurveUsesPositivePrefix) {
  const CircleChain chain;
  const std::vector<std::pair<double, double>> pairs = {{0.0, 3.0}};
  auto d = [](double x, double y) { return std::abs(x - y) > 0.0 ? 1.0 : 0.0; };
  const auto fit = estimate_contraction<double>(chain, d, pairs, 40, 50, 10);
  EXPECT_LT(fit.slope, 0.0);
  EXPECT_LE(fit.fitted_steps, 40u);
}

TEST(EstimateContraction, PilotBoundHoldsAtTwiceTheHorizon) {
  const CircleChain chain;
  const std::vector<std::pair<double, double>> pairs = {{0.0, 3.0}};
  auto d = [](double x, double y) {
    const double g = std::abs(x - y);
    return std::min(g, CircleChain::kTwoPi - g);
  };
  const auto pilot = estimate_contraction<double>(chain, d, pairs, 4, 20000, 11);
  const auto fresh = estimate_contraction<double>(chain, d, pairs, 8, 20000, 12);
  // Per-step meet probability ≥ (8−2π)/4 gives c = 1, r = 1 − (8−2π)/4 as well.
  const double r = std::exp(pilot.slope);
  const double c = std::exp(pilot.intercept) / d(0.0, 3.0);
  EXPECT_LE(fresh.mean_distance[8], c * std::pow(r, 8.0) * d(0.0, 3.0) * 1.1);
  EXPECT_LE(fresh.mean_distance[8], std::pow(1.0 - (8.0 - 2.0 * std::numbers::pi) / 4.0, 8.0) * 3.0);
}

TEST(Marginals, CoupledFirstComponentMatchesKernel) {
  const ContractingNormals cn(0.7);
  const CircleChain chain;
  std::vector<double> cn_coupled(10000), cn_lone(10000), c_coupled(10000), c_lone(10000);
  for (std::size_t k = 0; k < 10000; ++k) {
    Stream a(StreamKey::root(13).replicate(k));
    Stream b(StreamKey::root(14).replicate(k));
    cn_coupled[k] = cn(0.5, -1.0, a).first;
    cn_lone[k] = cn(0.5, b);
    c_coupled[k] = chain(1.0, 2.5, a).first;
    c_lone[k] = chain(1.0, b);
  }
  EXPECT_GT(stats::ks_two_sample(cn_coupled, cn_lone).p_value, 1e-3);
  EXPECT_GT(stats::ks_two_sample(c_coupled, c_lone).p_value, 1e-3);
}

TEST(Marginals, SharedRandomnessIsFaithful) {
  const ContractingNormals cn(0.7);
  const CircleChain chain;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Stream rng(StreamKey::root(15).replicate(k));
    const auto [x, y] = cn(0.3, 0.3, rng);
    EXPECT_EQ(x, y);
    const auto [u, v] = chain(4.0, 4.0, rng);
    EXPECT_EQ(u, v);
  }
}

TEST(ContractionSchedules, GeometricArithmetic) {
  const auto s = geometric_contraction_schedule(0.5, 0.25, 10);
  const std::vector<std::uint64_t> head = {1, 2, 3, 4, 5, 6, 8, 12, 16, 23};
  for (std::size_t i = 0; i < head.size(); ++i) EXPECT_EQ(s.schedule.steps(i), head[i]) << i;
  EXPECT_NEAR(s.survival(4), std::pow(0.5, 0.75 * 4), 1e-15);
  EXPECT_THROW(static_cast<void>(geometric_contraction_schedule(0.5, 0.5)), ValidationError);
}

TEST(ContractionSchedules, PolynomialArithmetic) {
  const auto s = polynomial_contraction_schedule(1.0, 1.0, 4.0, 0.5, 10);
  EXPECT_EQ(s.schedule.steps(0), 1u);
  EXPECT_EQ(s.schedule.steps(2), 81u);
  EXPECT_NEAR(s.survival(1), std::pow(2.0, -5.5), 1e-15);
  EXPECT_THROW(static_cast<void>(polynomial_contraction_schedule(1.0, 1.0, 3.0, 0.5)), ValidationError);
  EXPECT_THROW(static_cast<void>(polynomial_contraction_schedule(1.0, 1.0, 4.0, 1.0)), ValidationError);
}
