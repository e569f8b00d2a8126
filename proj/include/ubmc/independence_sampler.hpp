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

namespace ubmc::independence {

enum class Branch { minorize, residual_accept, residual_reject };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::minorize: return "minorize";
    case Branch::residual_accept: return "residual-accept";
    case Branch::residual_reject: return "residual-reject";
  }
  return "?";
}

/// Uniform prior on the box Π_k [−u*_k, u*_k] with Gaussian misfit
/// ½‖y − G_j(x)‖²; G_j is chosen by the length j of the state.
struct UniformPriorModel {
  std::function<double(std::size_t)> u_star;  // k ≥ 1
  std::function<std::vector<double>(std::span<const double>)> forward;
  std::vector<double> data;
  double alpha_star = 0.0;      // floor on every acceptance probability
  double cost_exponent = 1.0;   // one step in dimension j costs j^θ

  void validate(std::size_t prefix) const {
    require(static_cast<bool>(u_star) && static_cast<bool>(forward), "model needs u* and a forward map");
    require(alpha_star > 0.0 && alpha_star <= 1.0, "α⋆ must lie in (0, 1]");
    double prev = u_star(1);
    require(prev > 0.0, "u*_1 must be positive");
    for (std::size_t k = 2; k <= prefix; ++k) {
      const double cur = u_star(k);
      require(cur > 0.0 && cur <= prev, "u* must be positive and nonincreasing at k = " + std::to_string(k));
      prev = cur;
    }
  }

  [[nodiscard]] double misfit(std::span<const double> x) const {
    const auto g = forward(x);
    require(g.size() == data.size(), "forward output length differs from data length");
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g[k])) throw NonFiniteError("non-finite forward output", x.size());
      s += (data[k] - g[k]) * (data[k] - g[k]);
    }
    return 0.5 * s;
  }
};

/// 1 ∧ exp(Φ(x) − Φ(ξ)).
inline double acceptance_from_misfits(double misfit_x, double misfit_xi) {
  return std::exp(std::min(0.0, misfit_x - misfit_xi));
}

inline double is_acceptance(const UniformPriorModel& model, std::span<const double> x,
                            std::span<const double> xi) {
  require(x.size() == xi.size(), "state and proposal must share a dimension");
  return acceptance_from_misfits(model.misfit(x), model.misfit(xi));
}

/// A chain state with its cached misfit.
struct ChainState {
  std::vector<double> x;
  double misfit = 0.0;
  friend bool operator==(const ChainState&, const ChainState&) = default;
};

inline ChainState make_state(const UniformPriorModel& model, std::vector<double> x) {
  ChainState s{std::move(x), 0.0};
  s.misfit = model.misfit(s.x);
  return s;
}

/// Shared randomness W = (U₁, U₂, ξ₁, ξ₂) of one step.
struct StepNoise {
  double u1 = 0.0;
  double u2 = 0.0;
  std::vector<double> xi1;
  std::vector<double> xi2;
};

template <NoiseSource R>
StepNoise draw_noise(const UniformPriorModel& model, std::size_t dim, R& rng) {
  StepNoise w;
  w.u1 = rng.uniform();
  w.u2 = rng.uniform();
  w.xi1.resize(dim);
  w.xi2.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) w.xi1[k] = model.u_star(k + 1) * (2.0 * rng.uniform() - 1.0);
  for (std::size_t k = 0; k < dim; ++k) w.xi2[k] = model.u_star(k + 1) * (2.0 * rng.uniform() - 1.0);
  return w;
}

struct StepResult {
  ChainState state;
  Branch branch = Branch::minorize;
};

namespace detail {

inline std::vector<double> project(const std::vector<double>& v, std::size_t dim) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(dim, v.size()))};
}

inline StepResult branch_step(const UniformPriorModel& model, const ChainState& s, const StepNoise& w) {
  const std::size_t dim = s.x.size();
  require(w.xi1.size() >= dim && w.xi2.size() >= dim, "proposal dimension below state dimension");
  if (w.u1 <= model.alpha_star) return {make_state(model, project(w.xi1, dim)), Branch::minorize};
  ChainState candidate = make_state(model, project(w.xi2, dim));
  const double alpha = acceptance_from_misfits(s.misfit, candidate.misfit);
  if (alpha < model.alpha_star)
    throw std::runtime_error("observed acceptance " + std::to_string(alpha) + " below α⋆ = " +
                             std::to_string(model.alpha_star));
  if (w.u2 <= (alpha - model.alpha_star) / (1.0 - model.alpha_star))
    return {std::move(candidate), Branch::residual_accept};
  return {s, Branch::residual_reject};
}

}  // namespace detail

/// One independence-sampler step in the minorized representation.
inline StepResult is_step(const UniformPriorModel& model, const ChainState& s, const StepNoise& w) {
  return detail::branch_step(model, s, w);
}

struct CoupledResult {
  StepResult lo;
  StepResult hi;
};

/// Both chains share W; the low chain sees its projection onto X_{j_lo}.
inline CoupledResult coupled_is_step(const UniformPriorModel& model, const ChainState& lo,
                                     const ChainState& hi, const StepNoise& w) {
  require(lo.x.size() <= hi.x.size(), "coupled step needs j_lo ≤ j_hi");
  require(w.xi1.size() == hi.x.size(), "proposals must live on X_{j_hi}");
  return {detail::branch_step(model, lo, w), detail::branch_step(model, hi, w)};
}

inline std::vector<double> embed(std::span<const double> x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  std::copy_n(x.begin(), std::min(dim, x.size()), out.begin());
  return out;
}

/// Level difference of the coupled independence samplers. Work a_i · j_i^θ.
template <class F, NoiseSource R>
LevelSample<double> unbiased_is_delta(const UniformPriorModel& model, const LevelSchedule& schedule,
                                      std::size_t level, const F& f, std::span<const double> x0,
                                      R& rng) {
  require(schedule.transdimensional(), "independence sampler needs a dimension schedule");
  require(x0.size() <= schedule.dim(0), "x0 must lie in X_{j_0}");
  const auto j_i = static_cast<std::size_t>(schedule.dim(level));
  const std::uint64_t a_i = schedule.steps(level);
  LevelSample<double> out;
  out.work = static_cast<double>(a_i) * std::pow(static_cast<double>(j_i), model.cost_exponent);
  out.dim = j_i;
  ChainState top = make_state(model, embed(x0, j_i));
  const std::uint64_t lone = level == 0 ? a_i : a_i - schedule.steps(level - 1);
  for (std::uint64_t k = 0; k < lone; ++k) top = is_step(model, top, draw_noise(model, j_i, rng)).state;
  if (level == 0) {
    out.delta = f(std::span<const double>(top.x));
    return out;
  }
  ChainState bottom = make_state(model, embed(x0, static_cast<std::size_t>(schedule.dim(level - 1))));
  for (std::uint64_t k = 0; k < schedule.steps(level - 1); ++k) {
    auto step = coupled_is_step(model, bottom, top, draw_noise(model, j_i, rng));
    bottom = std::move(step.lo.state);
    top = std::move(step.hi.state);
  }
  out.delta = f(std::span<const double>(top.x)) - f(std::span<const double>(bottom.x));
  return out;
}

struct Theorem5Schedule {
  LevelSchedule schedule;
  SurvivalDistribution survival;
  double c_star;
};

/// c⋆ = −log(1 − α⋆).
inline double contraction_constant(double alpha_star) {
  require(alpha_star > 0.0 && alpha_star <= 1.0, "α⋆ must lie in (0, 1]");
  return -std::log1p(-alpha_star);
}

/// j_i = ⌈max(i,1)^q⌉, a_i = ⌈(qβ/c⋆) log(i+2)⌉, both strictly increasing;
/// F̄_i = (i+1)^{−t} with t ∈ (1+θq, rq−2), r = β ∧ κ.
inline Theorem5Schedule theorem5_schedule(double q, double beta, double kappa, double theta,
                                          double alpha_star, double t, std::size_t levels = 40) {
  require(levels >= 2, "theorem5_schedule needs at least two levels");
  require(beta > 0.0 && kappa > 0.0 && theta >= 0.0, "β, κ must be positive and θ nonnegative");
  const double r = std::min(beta, kappa);
  require(r > theta, "requires β ∧ κ > θ");
  require(q > 3.0 / (r - theta), "requires q > 3/(β∧κ − θ) = " + std::to_string(3.0 / (r - theta)));
  const double lo = 1.0 + theta * q;
  const double hi = r * q - 2.0;
  require(t > lo && t < hi, "requires t in (1+θq, (β∧κ)q−2) = (" + std::to_string(lo) + ", " +
                                std::to_string(hi) + ")");
  const double c_star = contraction_constant(alpha_star);
  std::vector<double> raw_j(levels), raw_a(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    raw_j[i] = std::pow(std::max(1.0, static_cast<double>(i)), q);
    raw_a[i] = (q * beta / c_star) * std::log(static_cast<double>(i) + 2.0);
  }
  auto dims = strictly_increasing_ceil(raw_j);
  auto steps = strictly_increasing_ceil(raw_a);
  steps.resize(std::min(steps.size(), dims.size()));
  return {LevelSchedule(std::move(steps), std::move(dims)), SurvivalDistribution::polynomial(t), c_star};
}

}  // namespace ubmc::independence
