#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/rng.hpp"
#include "ubmc/schedule.hpp"
#include "ubmc/survival.hpp"

namespace ubmc::gaussian_linear {

/// Diagonal conjugate problem: K*K has eigenvalues ℓ^{−4p}, the prior
/// covariance ℓ^{−2a}, the data coefficients y_ℓ lie in [c₋, c₊].
class Model {
 public:
  using DataFn = std::function<double(std::size_t)>;

  Model(double p, double a, DataFn data) : p_(p), a_(a), data_(std::move(data)) {
    require(p >= 0.0, "linear Gaussian model needs p ≥ 0");
    require(a > 0.5, "linear Gaussian model needs a > 1/2");
    require(static_cast<bool>(data_), "linear Gaussian model needs a data generator");
  }

  /// y_ℓ = c₋ + (c₊ − c₋)·frac(ℓφ) with φ the golden ratio.
  static DataFn golden_data(double lower = 0.5, double upper = 1.5) {
    require(lower <= upper, "data bounds must satisfy c₋ ≤ c₊");
    return [lower, upper](std::size_t ell) {
      const double t = static_cast<double>(ell) * std::numbers::phi;
      return lower + (upper - lower) * (t - std::floor(t));
    };
  }

  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double a() const noexcept { return a_; }
  [[nodiscard]] double data(std::size_t ell) const { return data_(ell); }

  struct Coordinate {
    double mean;
    double variance;
  };

  /// Exact posterior law N(m_ℓ, c_ℓ) of coordinate ℓ ≥ 1.
  [[nodiscard]] Coordinate posterior(std::size_t ell) const {
    require(ell >= 1, "coordinates are indexed from 1");
    const double l = static_cast<double>(ell);
    const double denom = std::pow(l, 2.0 * a_) + std::pow(l, -4.0 * p_);
    return {std::pow(l, -2.0 * p_) * data_(ell) / denom, 1.0 / denom};
  }

  [[nodiscard]] double prior_sd(std::size_t ell) const {
    return std::pow(static_cast<double>(ell), -a_);
  }

 private:
  double p_;
  double a_;
  DataFn data_;
};

/// Bounded linear functional f(u) = Σ_ℓ f_ℓ u_ℓ; coefficients[0] is f_1.
struct LinearFunctional {
  std::vector<double> coefficients;

  static LinearFunctional coordinate(std::size_t ell) {
    require(ell >= 1, "coordinates are indexed from 1");
    LinearFunctional f;
    f.coefficients.assign(ell, 0.0);
    f.coefficients[ell - 1] = 1.0;
    return f;
  }

  [[nodiscard]] double coefficient(std::size_t ell) const noexcept {
    return ell >= 1 && ell <= coefficients.size() ? coefficients[ell - 1] : 0.0;
  }

  [[nodiscard]] double operator()(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size() && k < coefficients.size(); ++k) s += coefficients[k] * u[k];
    return s;
  }
};

namespace detail {

inline void check_dims(std::span<const std::uint64_t> dims, std::size_t level) {
  require_strictly_increasing(dims, "dimension");
  if (level >= dims.size())
    throw std::out_of_range("level " + std::to_string(level) + " beyond dimension schedule");
}

}  // namespace detail

/// Posterior draw truncated to j_i coordinates, sharing ζ_ℓ with the coarser
/// truncation. Returns f(u^i) − f(u^{i−1}) (f(u^0) at level 0); work j_i.
template <class F, NoiseSource R>
LevelSample<double> truncation_delta(const Model& model, std::span<const std::uint64_t> dims,
                                     std::size_t level, const F& f, R& rng) {
  detail::check_dims(dims, level);
  const auto j = static_cast<std::size_t>(dims[level]);
  std::vector<double> u(j);
  for (std::size_t k = 0; k < j; ++k) {
    const auto c = model.posterior(k + 1);
    u[k] = c.mean + std::sqrt(c.variance) * rng.normal();
  }
  const std::span<const double> fine(u);
  LevelSample<double> out;
  out.work = static_cast<double>(j);
  out.dim = j;
  out.delta = f(fine);
  if (level > 0) out.delta -= f(fine.first(static_cast<std::size_t>(dims[level - 1])));
  return out;
}

/// ũ^i − ũ^{i−1} on its support (j_{i−1}, j_i]: m_ℓ + (√c_ℓ − ℓ^{−a})ζ_ℓ.
template <NoiseSource R>
std::vector<double> prior_tail_block(const Model& model, std::span<const std::uint64_t> dims,
                                     std::size_t level, R& rng) {
  detail::check_dims(dims, level);
  require(level >= 1, "prior_tail_block is defined for levels ≥ 1");
  const auto lo = static_cast<std::size_t>(dims[level - 1]);
  const auto hi = static_cast<std::size_t>(dims[level]);
  std::vector<double> block(hi - lo);
  for (std::size_t ell = lo + 1; ell <= hi; ++ell) {
    const auto c = model.posterior(ell);
    block[ell - lo - 1] = c.mean + (std::sqrt(c.variance) - model.prior_sd(ell)) * rng.normal();
  }
  return block;
}

/// u^i − u^{i−1} on its support (j_{i−1}, j_i]: m_ℓ + √c_ℓ ζ_ℓ.
template <NoiseSource R>
std::vector<double> truncation_block(const Model& model, std::span<const std::uint64_t> dims,
                                     std::size_t level, R& rng) {
  detail::check_dims(dims, level);
  require(level >= 1, "truncation_block is defined for levels ≥ 1");
  const auto lo = static_cast<std::size_t>(dims[level - 1]);
  const auto hi = static_cast<std::size_t>(dims[level]);
  std::vector<double> block(hi - lo);
  for (std::size_t ell = lo + 1; ell <= hi; ++ell) {
    const auto c = model.posterior(ell);
    block[ell - lo - 1] = c.mean + std::sqrt(c.variance) * rng.normal();
  }
  return block;
}

/// Level difference when coordinates beyond j_i follow the prior. Only the
/// block (j_{i−1}, j_i] differs between levels; at level 0 the prior tail of
/// f(ũ^0) is one Gaussian with variance Σ_{ℓ>j_0} f_ℓ² ℓ^{−2a}. Work j_i.
template <NoiseSource R>
LevelSample<double> prior_tail_delta(const Model& model, std::span<const std::uint64_t> dims,
                                     std::size_t level, const LinearFunctional& f, R& rng) {
  detail::check_dims(dims, level);
  LevelSample<double> out;
  out.work = static_cast<double>(dims[level]);
  out.dim = dims[level];
  if (level == 0) {
    const auto j0 = static_cast<std::size_t>(dims[0]);
    double value = 0.0;
    for (std::size_t ell = 1; ell <= j0; ++ell) {
      const auto c = model.posterior(ell);
      value += f.coefficient(ell) * (c.mean + std::sqrt(c.variance) * rng.normal());
    }
    double tail_var = 0.0;
    for (std::size_t ell = j0 + 1; ell <= f.coefficients.size(); ++ell) {
      const double w = f.coefficient(ell) * model.prior_sd(ell);
      tail_var += w * w;
    }
    if (tail_var > 0.0) value += std::sqrt(tail_var) * rng.normal();
    out.delta = value;
    return out;
  }
  const auto lo = static_cast<std::size_t>(dims[level - 1]);
  const auto block = prior_tail_block(model, dims, level, rng);
  double value = 0.0;
  for (std::size_t k = 0; k < block.size(); ++k) value += f.coefficient(lo + 1 + k) * block[k];
  out.delta = value;
  return out;
}

enum class Variant { holder_truncation, linear_tail };
enum class Geometry { dyadic, polynomial };

struct TheoremParams {
  double s = 1.0;        // Hölder exponent of f
  double a = 1.0;        // prior decay
  double p = 0.0;        // forward-operator decay
  double q = 2.0;        // polynomial growth j_i ≈ i^q
  double epsilon = 0.5;
  std::size_t levels = 40;
};

struct TheoremSchedule {
  std::vector<std::uint64_t> dims;
  SurvivalDistribution survival;
};

/// Dimension schedule and survival law for the truncation (holder_truncation)
/// or prior-tail (linear_tail) estimator.
inline TheoremSchedule theorem_schedule(Variant variant, Geometry geometry, const TheoremParams& prm) {
  require(prm.levels >= 2, "theorem_schedule needs at least two levels");
  require(prm.s > 0.0 && prm.s <= 1.0, "Hölder exponent s must lie in (0, 1]");
  require(prm.a > 0.5, "prior decay requires a > 1/2");
  require(prm.p >= 0.0, "forward decay requires p ≥ 0");
  const double s = prm.s, a = prm.a, p = prm.p, q = prm.q, eps = prm.epsilon;

  if (geometry == Geometry::dyadic) {
    std::vector<double> raw(prm.levels);
    for (std::size_t i = 0; i < prm.levels; ++i) raw[i] = std::ldexp(1.0, static_cast<int>(i));
    double exponent = 0.0;
    if (variant == Variant::holder_truncation) {
      require(a > (1.0 + s) / (2.0 * s), "holder-truncation requires a > (1+s)/(2s)");
      const double upper = (2.0 + 2.0 * s - 4.0 * a * s) / (s * (1.0 - 2.0 * a));
      require(eps > 0.0 && eps < upper,
              "holder-truncation requires ε in (0, (2+2s−4as)/(s(1−2a))) = (0, " + std::to_string(upper) + ")");
      exponent = (2.0 - eps) * s * (1.0 - 2.0 * a) / 2.0;
    } else {
      const double r = 1.0 - 4.0 * p - 4.0 * a;
      const double upper = (4.0 - 8.0 * p - 8.0 * a) / r;
      require(eps > 0.0 && eps < upper,
              "linear-tail requires ε in (0, (4−8p−8a)/(1−4p−4a)) = (0, " + std::to_string(upper) + ")");
      exponent = (2.0 - eps) * r / 2.0;
    }
    return {strictly_increasing_ceil(raw), SurvivalDistribution::geometric(2.0, exponent)};
  }

  // The polynomial variant uses one set of conditions for both estimators.
  const double slope = 1.0 + s - 2.0 * a * s;
  require(q > 0.0, "polynomial growth requires q > 0");
  require(q > (s - 3.0) / slope, "polynomial geometry requires q > (s−3)/(1+s−2as)");
  const double upper = s - 3.0 - q * slope;
  require(eps > 0.0 && eps < upper,
          "polynomial geometry requires ε in (0, s−3−q(1+s−2as)) = (0, " + std::to_string(upper) + ")");
  if (variant == Variant::holder_truncation)
    require(a > (1.0 + s) / (2.0 * s), "holder-truncation requires a > (1+s)/(2s)");
  std::vector<double> raw(prm.levels);
  for (std::size_t i = 0; i < prm.levels; ++i)
    raw[i] = std::pow(std::max(1.0, static_cast<double>(i)), q);
  const double t = -(s * (q - 1.0 - 2.0 * a * q) + 2.0 + eps);
  return {strictly_increasing_ceil(raw), SurvivalDistribution::polynomial(t)};
}

}  // namespace ubmc::gaussian_linear
