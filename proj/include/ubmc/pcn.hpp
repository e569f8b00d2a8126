#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/rng.hpp"
#include "ubmc/schedule.hpp"
#include "ubmc/survival.hpp"

namespace ubmc::pcn {

/// Target dπ ∝ exp(−g) dμ₀ with reference μ₀ = N(c, C). By default c = 0 and
/// C = diag(λ_ℓ); a nonempty `cholesky` (row-major lower factor of C) replaces
/// the diagonal, for fixed-dimension problems.
struct Model {
  double rho = 0.5;
  std::function<double(std::span<const double>)> potential;
  double lipschitz = 0.0;
  std::function<double(std::size_t)> lambda;  // ℓ ≥ 1
  double regularity = 1.0;                     // λ_ℓ ≲ ℓ^{−2a}
  std::vector<double> center;
  std::vector<double> cholesky;
  double cost_exponent = 1.0;

  void validate(std::size_t prefix) const {
    require(rho > 0.0 && rho < 1.0, "pCN needs ρ in (0, 1)");
    require(static_cast<bool>(potential), "pCN needs a potential g");
    if (cholesky.empty()) {
      require(static_cast<bool>(lambda), "pCN needs reference eigenvalues λ");
      double prev = lambda(1);
      require(prev > 0.0, "λ_1 must be positive");
      for (std::size_t l = 2; l <= prefix; ++l) {
        const double cur = lambda(l);
        require(cur > 0.0 && cur <= prev, "λ must be positive and nonincreasing at ℓ = " + std::to_string(l));
        prev = cur;
      }
    } else {
      const std::size_t d = dimension_of_factor();
      require(d * d == cholesky.size(), "Cholesky factor must be square");
      require(center.empty() || center.size() == d, "center length must match the factor");
    }
  }

  /// Checks |g(x) − g(z)| ≤ L‖x − z‖ on random Gaussian pairs.
  template <NoiseSource R>
  bool lipschitz_spot_check(std::size_t dim, std::size_t pairs, R& rng) const {
    for (std::size_t n = 0; n < pairs; ++n) {
      std::vector<double> x(dim), z(dim);
      double dist2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        x[k] = 3.0 * rng.normal();
        z[k] = 3.0 * rng.normal();
        dist2 += (x[k] - z[k]) * (x[k] - z[k]);
      }
      if (std::abs(potential(x) - potential(z)) > lipschitz * std::sqrt(dist2) * (1.0 + 1e-12) + 1e-12)
        return false;
    }
    return true;
  }

  [[nodiscard]] std::size_t dimension_of_factor() const {
    return static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cholesky.size()))));
  }
  [[nodiscard]] double center_at(std::size_t k) const { return k < center.size() ? center[k] : 0.0; }
};

/// Chain state with its cached potential.
struct State {
  std::vector<double> x;
  double potential = 0.0;
  friend bool operator==(const State&, const State&) = default;
};

inline State make_state(const Model& model, std::vector<double> x) {
  State s{std::move(x), 0.0};
  s.potential = model.potential(s.x);
  if (!std::isfinite(s.potential)) throw NonFiniteError("non-finite potential", s.x.size());
  return s;
}

/// Shared randomness of one step: ξ ~ N(0, C) on X_j and the uniform U.
struct StepNoise {
  std::vector<double> xi;
  double u = 0.5;
};

template <NoiseSource R>
StepNoise draw_noise(const Model& model, std::size_t dim, R& rng) {
  StepNoise w;
  w.xi.resize(dim);
  if (model.cholesky.empty()) {
    for (std::size_t k = 0; k < dim; ++k) w.xi[k] = std::sqrt(model.lambda(k + 1)) * rng.normal();
  } else {
    const std::size_t d = model.dimension_of_factor();
    require(dim == d, "Cholesky reference is fixed-dimensional");
    std::vector<double> z(d);
    for (auto& v : z) v = rng.normal();
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c <= r; ++c) s += model.cholesky[r * d + c] * z[c];
      w.xi[r] = s;
    }
  }
  w.u = rng.uniform();
  return w;
}

struct StepResult {
  State state;
  bool accepted = false;
};

/// Proposal x̂ = c + ρ(x − c) + √(1−ρ²)ξ using the first dim(x) noise entries;
/// accept iff log U ≤ min(0, g(x) − g(x̂)).
inline StepResult pcn_step(const Model& model, const State& s, const StepNoise& w) {
  const std::size_t dim = s.x.size();
  require(w.xi.size() >= dim, "noise dimension below state dimension");
  const double scale = std::sqrt(1.0 - model.rho * model.rho);
  std::vector<double> prop(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double c = model.center_at(k);
    prop[k] = c + model.rho * (s.x[k] - c) + scale * w.xi[k];
  }
  State candidate = make_state(model, std::move(prop));
  const double log_alpha = std::min(0.0, s.potential - candidate.potential);
  if (std::log(w.u) <= log_alpha) return {std::move(candidate), true};
  return {s, false};
}

struct CoupledResult {
  StepResult lo;
  StepResult hi;
};

/// Top uses ξ, bottom uses Π_{j_lo}ξ; one U decides both acceptances.
inline CoupledResult coupled_pcn_step(const Model& model, const State& lo, const State& hi,
                                      const StepNoise& w) {
  require(lo.x.size() <= hi.x.size(), "coupled step needs j_lo ≤ j_hi");
  require(w.xi.size() == hi.x.size(), "noise must live on X_{j_hi}");
  return {pcn_step(model, lo, w), pcn_step(model, hi, w)};
}

inline std::vector<double> embed(std::span<const double> x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  std::copy_n(x.begin(), std::min(dim, x.size()), out.begin());
  return out;
}

/// Level difference of the coupled pCN chains over a level schedule. On a
/// fixed-dimensional model pass a schedule without dimensions and set
/// `fixed_dim`. Work a_i · j_i^θ.
template <class F, NoiseSource R>
LevelSample<double> unbiased_pcn_delta(const Model& model, const LevelSchedule& schedule,
                                       std::size_t level, const F& f, std::span<const double> x0,
                                       R& rng, std::size_t fixed_dim = 0) {
  auto dim_at = [&](std::size_t i) {
    return schedule.transdimensional() ? static_cast<std::size_t>(schedule.dim(i)) : fixed_dim;
  };
  require(dim_at(0) >= 1, "pCN level needs a positive dimension");
  require(x0.size() <= dim_at(0), "x0 must lie in X_{j_0}");
  const std::size_t j_i = dim_at(level);
  const std::uint64_t a_i = schedule.steps(level);
  LevelSample<double> out;
  out.work = static_cast<double>(a_i) * std::pow(static_cast<double>(j_i), model.cost_exponent);
  out.dim = j_i;
  State top = make_state(model, embed(x0, j_i));
  const std::uint64_t lone = level == 0 ? a_i : a_i - schedule.steps(level - 1);
  for (std::uint64_t k = 0; k < lone; ++k) top = pcn_step(model, top, draw_noise(model, j_i, rng)).state;
  if (level == 0) {
    out.delta = f(std::span<const double>(top.x));
    return out;
  }
  State bottom = make_state(model, embed(x0, dim_at(level - 1)));
  for (std::uint64_t k = 0; k < schedule.steps(level - 1); ++k) {
    auto step = coupled_pcn_step(model, bottom, top, draw_noise(model, j_i, rng));
    bottom = std::move(step.lo.state);
    top = std::move(step.hi.state);
  }
  out.delta = f(std::span<const double>(top.x)) - f(std::span<const double>(bottom.x));
  return out;
}

/// ‖x − y‖ with the shorter vector zero-padded.
inline double padded_distance(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::max(x.size(), y.size());
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = (k < x.size() ? x[k] : 0.0) - (k < y.size() ? y[k] : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double norm(std::span<const double> x) { return padded_distance(x, {}); }

enum class DistanceKind { d_tau, d_tilde };

/// d_τ = 1 ∧ ‖x−y‖/τ; d̃ = √(d_τ (1 + e^{‖x‖} + e^{‖y‖})).
inline double pcn_distance(DistanceKind kind, double tau, std::span<const double> x,
                           std::span<const double> y) {
  require(tau > 0.0, "distance scale τ must be positive");
  const double dt = std::min(1.0, padded_distance(x, y) / tau);
  if (kind == DistanceKind::d_tau) return dt;
  return std::sqrt(dt * (1.0 + std::exp(norm(x)) + std::exp(norm(y))));
}

/// Mean ‖X_top − X_bottom‖ after k = 0..joint_steps coupled steps. The top
/// chain first runs `lone_steps` steps in dimension j_hi from x0; the bottom
/// chain starts at x0 in dimension j_lo.
inline std::vector<double> transdimensional_distance_curve(const Model& model, std::size_t j_lo,
                                                           std::size_t j_hi, std::span<const double> x0,
                                                           std::size_t lone_steps, std::size_t joint_steps,
                                                           std::size_t replicates, std::uint64_t seed) {
  require(j_lo >= 1 && j_lo <= j_hi, "curve needs 1 ≤ j_lo ≤ j_hi");
  std::vector<double> curve(joint_steps + 1, 0.0);
  const StreamKey root = StreamKey::root(seed).child(Phase::pilot);
  for (std::size_t r = 0; r < replicates; ++r) {
    Stream rng(root.replicate(r));
    State top = make_state(model, embed(x0, j_hi));
    for (std::size_t k = 0; k < lone_steps; ++k) top = pcn_step(model, top, draw_noise(model, j_hi, rng)).state;
    State bottom = make_state(model, embed(x0, j_lo));
    curve[0] += padded_distance(top.x, bottom.x);
    for (std::size_t k = 1; k <= joint_steps; ++k) {
      auto step = coupled_pcn_step(model, bottom, top, draw_noise(model, j_hi, rng));
      bottom = std::move(step.lo.state);
      top = std::move(step.hi.state);
      curve[k] += padded_distance(top.x, bottom.x);
    }
  }
  for (double& c : curve) c /= static_cast<double>(replicates);
  return curve;
}

enum class Regime { bounded, unbounded };

struct Theorem67Schedule {
  LevelSchedule schedule;
  SurvivalDistribution survival;
};

/// a_i = m(i+1); j_i = ⌈r^{k m i/(1−2a)}⌉ strictly increasing with k = 2
/// (bounded potential) or 4 (unbounded); F̄_i = r^{(m−ε)i} with
/// ε ∈ (0, m − k θ m/(2a−1)).
inline Theorem67Schedule theorem67_schedule(double regularity, Regime regime, std::uint64_t m, double r,
                                            double theta, double epsilon, std::size_t levels = 40) {
  require(m >= 1, "step multiplier m must be ≥ 1");
  require(r > 0.0 && r < 1.0, "contraction rate r must lie in (0, 1)");
  require(theta >= 1.0, "cost exponent θ must be ≥ 1");
  require(levels >= 2, "theorem67_schedule needs at least two levels");
  const double k = regime == Regime::bounded ? 2.0 : 4.0;
  const double a = regularity;
  if (regime == Regime::bounded) require(a > theta + 0.5, "bounded regime requires a > θ + 1/2");
  else require(a > 2.0 * theta + 0.5, "unbounded regime requires a > 2θ + 1/2");
  const double md = static_cast<double>(m);
  const double upper = md - k * theta * md / (2.0 * a - 1.0);
  require(epsilon > 0.0 && epsilon < upper,
          "requires ε in (0, m − " + std::to_string(static_cast<int>(k)) + "θm/(2a−1)) = (0, " +
              std::to_string(upper) + ")");
  std::vector<double> raw(levels);
  std::vector<std::uint64_t> steps(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    raw[i] = std::pow(r, k * md * static_cast<double>(i) / (1.0 - 2.0 * a));
    steps[i] = m * (i + 1);
  }
  auto dims = strictly_increasing_ceil(raw);
  steps.resize(dims.size());
  return {LevelSchedule(std::move(steps), std::move(dims)), SurvivalDistribution::geometric(r, md - epsilon)};
}

}  // namespace ubmc::pcn
