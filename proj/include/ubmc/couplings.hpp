#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/rng.hpp"
#include "ubmc/schedule.hpp"
#include "ubmc/stats.hpp"
#include "ubmc/survival.hpp"

namespace ubmc {

template <class K, class State, class R>
concept MarkovKernel = requires(const K& k, const State& x, R& r) {
  { k(x, r) } -> std::convertible_to<State>;
};

template <class C, class State, class R>
concept CoupledKernel = requires(const C& c, const State& x, const State& y, R& r) {
  { c(x, y, r) } -> std::convertible_to<std::pair<State, State>>;
};

/// Level difference for a contracting coupling on a fixed state space.
/// Level 0 is f after a_0 steps. Level i ≥ 1 runs the top chain
/// a_i − a_{i−1} steps alone, starts the bottom chain at x0 and moves both
/// a_{i−1} steps through the coupling. The lone phase takes the first draws of
/// `rng`, the joint phase the rest. Work is a_i · step_work.
template <EstimandValue V, class State, class Kernel, class Coupling, class F, NoiseSource R>
  requires MarkovKernel<Kernel, State, R> && CoupledKernel<Coupling, State, R>
LevelSample<V> coupled_contraction_delta(const Kernel& kernel, const Coupling& coupling,
                                         const LevelSchedule& schedule, std::size_t level,
                                         const State& x0, const F& f, R& rng,
                                         double step_work = 1.0) {
  const std::uint64_t a_i = schedule.steps(level);
  LevelSample<V> out;
  out.work = static_cast<double>(a_i) * step_work;
  State top = x0;
  if (level == 0) {
    for (std::uint64_t k = 0; k < a_i; ++k) top = kernel(top, rng);
    out.delta = f(top);
    return out;
  }
  const std::uint64_t a_prev = schedule.steps(level - 1);
  for (std::uint64_t k = 0; k < a_i - a_prev; ++k) top = kernel(top, rng);
  State bottom = x0;
  for (std::uint64_t k = 0; k < a_prev; ++k) {
    auto next = coupling(top, bottom, rng);
    top = std::move(next.first);
    bottom = std::move(next.second);
  }
  out.delta = value::difference(f(top), f(bottom));
  return out;
}

/// One step of P = λν + (1−λ)Q: with probability λ a draw from ν, else one
/// residual step from x.
template <class State, class Nu, class Residual, NoiseSource R>
State minorized_step(double lambda, const Nu& nu, const Residual& residual, const State& x, R& rng) {
  require(lambda > 0.0 && lambda < 1.0, "minorized_step needs λ in (0, 1)");
  if (rng.uniform() < lambda) return nu(rng);
  return residual(x, rng);
}

/// Both chains share the branch uniform and the ν draw; the residual steps use
/// common random numbers. The residual must consume a state-independent number
/// of draws for the streams to stay aligned.
template <class State, class Nu, class Residual, NoiseSource R>
std::pair<State, State> minorized_coupled_step(double lambda, const Nu& nu, const Residual& residual,
                                               const State& x, const State& y, R& rng) {
  require(lambda > 0.0 && lambda < 1.0, "minorized_coupled_step needs λ in (0, 1)");
  if (rng.uniform() < lambda) {
    State z = nu(rng);
    return {z, z};
  }
  R shadow = rng;
  State x1 = residual(x, shadow);
  State y1 = residual(y, rng);
  return {std::move(x1), std::move(y1)};
}

struct ContractionFit {
  double slope = 0.0;      // fitted log-contraction per step
  double intercept = 0.0;
  std::vector<double> mean_distance;  // index k = step, k = 0 is the initial gap
  std::size_t fitted_steps = 0;       // steps 1..fitted_steps entered the fit
};

/// Averages d(X_k, Y_k) over pairs × replicates and fits log mean distance
/// against k over steps 1..n, stopping at the first non-positive mean.
template <class State, class Coupling, class Distance>
  requires CoupledKernel<Coupling, State, Stream>
ContractionFit estimate_contraction(const Coupling& coupling, const Distance& d,
                                    std::span<const std::pair<State, State>> pairs,
                                    std::size_t steps, std::size_t replicates, std::uint64_t seed) {
  require(steps >= 2, "estimate_contraction needs at least two steps");
  require(replicates >= 1 && !pairs.empty(), "estimate_contraction needs pairs and replicates");
  for (const auto& [x, y] : pairs) require(!(x == y), "estimate_contraction rejects pairs with x = y");
  ContractionFit fit;
  fit.mean_distance.assign(steps + 1, 0.0);
  const StreamKey root = StreamKey::root(seed).child(Phase::pilot);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t r = 0; r < replicates; ++r) {
      Stream rng(root.child(p).replicate(r));
      State x = pairs[p].first;
      State y = pairs[p].second;
      fit.mean_distance[0] += d(x, y);
      for (std::size_t k = 1; k <= steps; ++k) {
        auto next = coupling(x, y, rng);
        x = std::move(next.first);
        y = std::move(next.second);
        fit.mean_distance[k] += d(x, y);
      }
    }
  }
  const auto total = static_cast<double>(pairs.size() * replicates);
  for (double& m : fit.mean_distance) m /= total;
  std::vector<double> ks, logs;
  for (std::size_t k = 1; k <= steps && fit.mean_distance[k] > 0.0; ++k) {
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log(fit.mean_distance[k]));
  }
  fit.fitted_steps = ks.size();
  require(ks.size() >= 2, "estimate_contraction: fewer than two positive mean distances");
  const auto line = stats::fit_line(ks, logs);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

struct ContractionSchedule {
  LevelSchedule schedule;
  SurvivalDistribution survival;
};

/// Geometric contraction at rate r: a_i = ⌈r^{(2ε−1)i}⌉ made strictly
/// increasing, F̄_i = r^{(1−ε)i}, 0 < ε < 1/2.
inline ContractionSchedule geometric_contraction_schedule(double r, double epsilon, std::size_t levels = 60) {
  require(r > 0.0 && r < 1.0, "contraction rate r must lie in (0, 1)");
  require(epsilon > 0.0 && epsilon < 0.5, "requires ε in (0, 1/2)");
  require(levels >= 2, "schedule needs at least two levels");
  std::vector<double> raw(levels);
  for (std::size_t i = 0; i < levels; ++i) raw[i] = std::pow(r, (2.0 * epsilon - 1.0) * static_cast<double>(i));
  return {LevelSchedule(strictly_increasing_ceil(raw)), SurvivalDistribution::geometric(r, 1.0 - epsilon)};
}

/// Polynomial contraction K^n d^{2s} ≲ n^{−2r} d^{2s}: a_i = ⌈(i+1)^k⌉ made
/// strictly increasing, F̄_i = (i+1)^{−(2rk−2−ε)}, with k > 3/(2s−1) and
/// 0 < ε < (2s−1)k − 3.
inline ContractionSchedule polynomial_contraction_schedule(double r, double s, double k, double epsilon,
                                                           std::size_t levels = 200) {
  require(r > 0.5, "polynomial contraction requires r > 1/2");
  require(s > 0.5 && s <= 1.0, "requires s in (1/2, 1] so that k > 3/(2s−1) is possible");
  require(k > 3.0 / (2.0 * s - 1.0), "requires k > 3/(2s−1) = " + std::to_string(3.0 / (2.0 * s - 1.0)));
  const double upper = (2.0 * s - 1.0) * k - 3.0;
  require(epsilon > 0.0 && epsilon < upper, "requires ε in (0, (2s−1)k−3) = (0, " + std::to_string(upper) + ")");
  const double t = 2.0 * r * k - 2.0 - epsilon;
  require(t > 0.0, "survival exponent 2rk−2−ε must be positive");
  require(levels >= 2, "schedule needs at least two levels");
  std::vector<double> raw(levels);
  for (std::size_t i = 0; i < levels; ++i) raw[i] = std::pow(static_cast<double>(i + 1), k);
  return {LevelSchedule(strictly_increasing_ceil(raw)), SurvivalDistribution::polynomial(t)};
}

}  // namespace ubmc
