#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "scripted_noise.hpp"
#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/gaussian_linear.hpp"
#include "ubmc/stats.hpp"

using namespace ubmc;
using namespace ubmc::gaussian_linear;

namespace {

Model golden(double p, double a) { return Model(p, a, Model::golden_data()); }

std::vector<std::uint64_t> dyadic(std::size_t levels) {
  std::vector<std::uint64_t> d(levels);
  for (std::size_t i = 0; i < levels; ++i) d[i] = std::uint64_t{1} << i;
  return d;
}

/// Log-log slope of E‖block‖² against j_{i−1} for i = 2..8 with j_i = 2^i.
template <class Block>
double block_slope(const Model& model, const Block& block, std::uint64_t seed) {
  const auto dims = dyadic(9);
  std::vector<double> js, second;
  for (std::size_t i = 2; i <= 8; ++i) {
    double s = 0.0;
    constexpr int draws = 4000;
    for (int r = 0; r < draws; ++r) {
      Stream rng(StreamKey::root(seed).level(i).replicate(static_cast<std::uint64_t>(r)));
      for (double v : block(model, dims, i, rng)) s += v * v;
    }
    js.push_back(static_cast<double>(dims[i - 1]));
    second.push_back(s / draws);
  }
  return stats::loglog_slope(js, second);
}

}  // namespace

TEST(Posterior, FirstCoordinateIsHalfData) {
  for (double p : {0.0, 0.3, 2.0}) {
    for (double a : {0.6, 1.0, 3.0}) {
      const auto m = golden(p, a);
      const auto c = m.posterior(1);
      EXPECT_DOUBLE_EQ(c.mean, m.data(1) / 2.0);
      EXPECT_DOUBLE_EQ(c.variance, 0.5);
    }
  }
}

TEST(Posterior, SecondCoordinateForUnitPrior) {
  const auto m = golden(0.0, 1.0);
  EXPECT_DOUBLE_EQ(m.posterior(2).mean, m.data(2) / 5.0);
  EXPECT_DOUBLE_EQ(m.posterior(2).variance, 0.2);
}

TEST(Posterior, ZeroDataGivesZeroMean) {
  const Model m(0.5, 1.5, [](std::size_t) { return 0.0; });
  for (std::size_t l = 1; l < 50; ++l) EXPECT_EQ(m.posterior(l).mean, 0.0);
}

TEST(Posterior, GoldenDataStaysInBounds) {
  const auto y = Model::golden_data(0.5, 1.5);
  for (std::size_t l = 1; l < 10000; ++l) {
    EXPECT_GE(y(l), 0.5);
    EXPECT_LE(y(l), 1.5);
  }
  EXPECT_THROW(Model(-0.1, 1.0, y), ValidationError);
  EXPECT_THROW(Model(0.0, 0.5, y), ValidationError);
}

TEST(TruncationDelta, LinearLevelOneSeesOnlyCoordinateTwo) {
  const auto m = golden(0.0, 1.0);
  const std::vector<std::uint64_t> dims = {1, 2};
  const LinearFunctional f{{3.0, 2.0}};
  ScriptedNoise noise({}, {0.7, -1.3});
  const auto d = truncation_delta(m, dims, 1, f, noise);
  const auto c = m.posterior(2);
  EXPECT_NEAR(d.delta, 2.0 * (c.mean + std::sqrt(c.variance) * -1.3), 1e-14);
  EXPECT_DOUBLE_EQ(d.work, 2.0);
  EXPECT_EQ(d.dim, 2u);
}

TEST(TruncationDelta, FirstCoordinateCancelsAboveLevelZero) {
  const auto m = golden(0.0, 2.0);
  const auto dims = dyadic(8);
  const auto f = LinearFunctional::coordinate(1);
  for (std::size_t i = 1; i < 8; ++i) {
    Stream rng(StreamKey::root(1).level(i));
    EXPECT_EQ(truncation_delta(m, dims, i, f, rng).delta, 0.0);
  }
}

TEST(TruncationDelta, RejectsDegenerateSchedule) {
  const auto m = golden(0.0, 1.0);
  const std::vector<std::uint64_t> dims = {1, 1};
  Stream rng(StreamKey::root(2));
  EXPECT_THROW(static_cast<void>(truncation_delta(m, dims, 1, LinearFunctional::coordinate(1), rng)),
               ValidationError);
}

TEST(PriorTailDelta, VanishesPastTheFunctional) {
  const auto m = golden(0.0, 1.0);
  const auto dims = dyadic(6);
  const auto f = LinearFunctional::coordinate(3);
  for (std::size_t i = 3; i < 6; ++i) {
    Stream rng(StreamKey::root(3).level(i));
    EXPECT_EQ(prior_tail_delta(m, dims, i, f, rng).delta, 0.0);
  }
}

TEST(PriorTailDelta, CoordinateTwoClosedForm) {
  const auto m = golden(0.0, 1.0);
  const std::vector<std::uint64_t> dims = {1, 2};
  ScriptedNoise noise({}, {0.4});
  const auto d = prior_tail_delta(m, dims, 1, LinearFunctional::coordinate(2), noise);
  EXPECT_NEAR(d.delta, m.data(2) / 5.0 + (1.0 / std::sqrt(5.0) - 0.5) * 0.4, 1e-15);
  EXPECT_EQ(noise.normals_used(), 1u);
}

TEST(PriorTailDelta, LevelZeroAggregatesPriorTail) {
  // f = u_1 + u_2 with j_0 = 1: f(ũ^0) = u_1 + ℓ=2 prior draw, variance c_1 + 2^{−2a}.
  const auto m = golden(0.0, 1.0);
  const std::vector<std::uint64_t> dims = {1, 2};
  const LinearFunctional f{{1.0, 1.0}};
  std::vector<double> xs(100000);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    Stream rng(StreamKey::root(4).replicate(r));
    xs[r] = prior_tail_delta(m, dims, 0, f, rng).delta;
  }
  const auto mom = stats::moments(xs);
  EXPECT_LT(std::abs(mom.mean - m.posterior(1).mean), 4.0 * mom.standard_error());
  const double var = 0.5 + 0.25;
  EXPECT_LT(std::abs(mom.variance - var), 4.0 * var * std::sqrt(2.0 / static_cast<double>(xs.size())));
}

TEST(Rates, TruncationSecondMomentSlope) {
  for (double a : {1.0, 1.5}) {
    const auto m = golden(0.0, a);
    auto block = [](const Model& mm, std::span<const std::uint64_t> d, std::size_t i, Stream& rng) {
      return truncation_block(mm, d, i, rng);
    };
    EXPECT_NEAR(block_slope(m, block, 5), 1.0 - 2.0 * a, 0.3) << "a = " << a;
  }
}

TEST(Rates, PriorTailSecondMomentSlope) {
  for (auto [p, a] : {std::pair{0.0, 1.0}, std::pair{0.25, 0.75}}) {
    const auto m = golden(p, a);
    auto block = [](const Model& mm, std::span<const std::uint64_t> d, std::size_t i, Stream& rng) {
      return prior_tail_block(mm, d, i, rng);
    };
    EXPECT_NEAR(block_slope(m, block, 6), 1.0 - 4.0 * p - 4.0 * a, 0.3) << "p = " << p << ", a = " << a;
  }
}

TEST(Rates, PriorTailSteeperWhenForwardDecays) {
  const auto m = golden(0.25, 1.0);
  auto trunc = [](const Model& mm, std::span<const std::uint64_t> d, std::size_t i, Stream& rng) {
    return truncation_block(mm, d, i, rng);
  };
  auto tail = [](const Model& mm, std::span<const std::uint64_t> d, std::size_t i, Stream& rng) {
    return prior_tail_block(mm, d, i, rng);
  };
  EXPECT_LT(block_slope(m, tail, 7), block_slope(m, trunc, 7) - 1.0);
}

TEST(TheoremSchedule, HolderDyadicExample) {
  TheoremParams prm;
  prm.s = 1.0;
  prm.a = 2.0;
  prm.epsilon = 0.5;
  prm.levels = 10;
  const auto t = theorem_schedule(Variant::holder_truncation, Geometry::dyadic, prm);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(t.dims[i], std::uint64_t{1} << i);
  EXPECT_DOUBLE_EQ(t.survival(0), 1.0);
  EXPECT_NEAR(t.survival(3), std::pow(2.0, 1.5 * -3.0 * 3.0 / 2.0), 1e-15);
}

TEST(TheoremSchedule, HolderRejectsSmallA) {
  TheoremParams prm;
  prm.a = 0.6;
  try {
    static_cast<void>(theorem_schedule(Variant::holder_truncation, Geometry::dyadic, prm));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("a > (1+s)/(2s)"), std::string::npos);
  }
}

TEST(TheoremSchedule, LinearTailDyadicBoundaryIsOpen) {
  // a = 0.75, p = 0: the admissible interval is (0, 1), so ε = 1 is rejected and
  // the survival exponent tends to −1 from inside.
  TheoremParams prm;
  prm.a = 0.75;
  prm.p = 0.0;
  prm.epsilon = 1.0;
  prm.levels = 12;
  EXPECT_THROW(static_cast<void>(theorem_schedule(Variant::linear_tail, Geometry::dyadic, prm)), ValidationError);
  prm.epsilon = 1.0 - 1e-9;
  const auto t = theorem_schedule(Variant::linear_tail, Geometry::dyadic, prm);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(t.survival(i), std::ldexp(1.0, -static_cast<int>(i)), 1e-9);
}

TEST(TheoremSchedule, PolynomialGeometryGrowsLikePower) {
  TheoremParams prm;
  prm.s = 1.0;
  prm.a = 2.0;
  prm.q = 2.0;
  prm.epsilon = 0.5;
  prm.levels = 8;
  const auto t = theorem_schedule(Variant::linear_tail, Geometry::polynomial, prm);
  for (std::size_t i = 1; i < t.dims.size(); ++i) EXPECT_GT(t.dims[i], t.dims[i - 1]);
  EXPECT_EQ(t.survival.family(), SurvivalDistribution::Family::polynomial);
}

TEST(Pipelines, UnbiasedForPosteriorCoordinate) {
  const auto m = golden(0.0, 1.5);
  const auto f = LinearFunctional::coordinate(2);
  const double target = m.posterior(2).mean;
  TheoremParams prm;
  prm.a = 1.5;
  prm.epsilon = 0.5;
  const auto t1 = theorem_schedule(Variant::holder_truncation, Geometry::dyadic, prm);
  auto trunc = [&](std::size_t i, Stream& rng) { return truncation_delta(m, t1.dims, i, f, rng); };
  const auto b1 = estimate_batch<double>(trunc, t1.survival, 20000, 8);
  EXPECT_LT(std::abs(b1.mean[0] - target), 4.0 * b1.standard_error[0]);
  prm.epsilon = 1.5;
  const auto t2 = theorem_schedule(Variant::linear_tail, Geometry::dyadic, prm);
  auto tail = [&](std::size_t i, Stream& rng) { return prior_tail_delta(m, t2.dims, i, f, rng); };
  const auto b2 = estimate_batch<double>(tail, t2.survival, 20000, 9);
  EXPECT_LT(std::abs(b2.mean[0] - target), 4.0 * b2.standard_error[0]);
}

TEST(Pipelines, SecondMomentMatchesLevelwiseNu) {
  const auto m = golden(0.0, 1.5);
  LinearFunctional f;
  for (int k = 0; k < 10; ++k) f.coefficients.push_back(std::ldexp(1.0, -k));
  TheoremParams prm;
  prm.a = 1.5;
  // ε = 0.9 keeps E Z⁴ finite so the sample second moment has a usable SE.
  prm.epsilon = 0.9;
  prm.levels = 40;
  const auto t = theorem_schedule(Variant::holder_truncation, Geometry::dyadic, prm);
  auto gen = [&](std::size_t i, Stream& rng) { return truncation_delta(m, t.dims, i, f, rng); };
  // ν̂_i = Var̂(Δ_i) + (EY − EY_{i−1})² − (EY − EY_i)² with EY_i = Σ_{ℓ ≤ j_i} f_ℓ m_ℓ
  // exact. Δ_i ≡ 0 once j_{i−1} ≥ 10, so levels 0..5 carry all of ν.
  auto truncated_mean = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t l = 1; l <= std::min<std::uint64_t>(t.dims[i], f.coefficients.size()); ++l)
      s += f.coefficients[l - 1] * m.posterior(l).mean;
    return s;
  };
  const double ey = truncated_mean(39);
  double formula = 0.0, formula_var = 0.0;
  constexpr int per_level = 40000;
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> ds(per_level);
    for (int r = 0; r < per_level; ++r) {
      Stream rng(StreamKey::root(10).level(i).replicate(static_cast<std::uint64_t>(r)));
      ds[r] = gen(i, rng).delta;
    }
    const auto mom = stats::moments(ds);
    const double before = i == 0 ? ey : ey - truncated_mean(i - 1);
    const double after = ey - truncated_mean(i);
    formula += (mom.variance + before * before - after * after) / t.survival(i);
    // Var(s²) ≈ 2σ⁴/(n−1) for near-Gaussian Δ_i.
    formula_var += 2.0 * mom.variance * mom.variance / (per_level - 1) / (t.survival(i) * t.survival(i));
  }
  const auto batch = estimate_batch<double>(gen, t.survival, 100000, 11);
  std::vector<double> z2;
  for (const auto& d : batch.draws) z2.push_back(d.value * d.value);
  const auto zm = stats::moments(z2);
  EXPECT_LT(std::abs(zm.mean - formula), 3.0 * std::sqrt(zm.standard_error() * zm.standard_error() + formula_var));
}
