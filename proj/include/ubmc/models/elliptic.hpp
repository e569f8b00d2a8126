#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/independence_sampler.hpp"
#include "ubmc/rng.hpp"

namespace ubmc::models {

/// One-dimensional elliptic problem −(u p′)′ = h on (0, 1) with Dirichlet data,
/// u(s) = m₀ + Σ_i u_i √2 sin(iπs) and observations p(x_k).
class Elliptic {
 public:
  using Antiderivative = std::function<double(double)>;

  Elliptic(double gamma, std::vector<double> observation_points)
      : gamma_(gamma), m0_(1.0 + std::riemann_zeta(gamma)), points_(std::move(observation_points)) {
    require(gamma > 3.0, "elliptic model needs γ > 3");
    require(!points_.empty(), "elliptic model needs observation points");
    for (double x : points_) require(x > 0.0 && x < 1.0, "observation points must lie in (0, 1)");
  }

  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] double mean_field() const noexcept { return m0_; }
  [[nodiscard]] const std::vector<double>& observation_points() const noexcept { return points_; }
  [[nodiscard]] double beta() const noexcept { return gamma_ - 0.5; }
  [[nodiscard]] double theta() const noexcept { return gamma_ / 2.0 - 0.25; }

  /// u*_i = i^{−γ}.
  [[nodiscard]] double coefficient_bound(std::size_t i) const {
    return std::pow(static_cast<double>(i), -gamma_);
  }

  /// N_j = ⌈j^{γ/2 − 1/4}⌉, at least 2.
  [[nodiscard]] std::size_t quadrature_points(std::size_t j) const {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(j), theta()))));
  }

  /// Lower bound on u over all prior draws: m₀ − √2 Σ u*_i.
  [[nodiscard]] double field_lower_bound() const { return m0_ - std::sqrt(2.0) * std::riemann_zeta(gamma_); }

  /// Bound on ‖G‖ valid for h = 1: |p(x)| ≤ x / u_min.
  [[nodiscard]] double forward_bound() const {
    double s = 0.0;
    for (double x : points_) s += x * x;
    return std::sqrt(s) / field_lower_bound();
  }

  /// exp(−½(‖y‖ + B)²).
  [[nodiscard]] double default_alpha_star(std::span<const double> data) const {
    double s = 0.0;
    for (double y : data) s += y * y;
    const double r = std::sqrt(s) + forward_bound();
    return std::exp(-0.5 * r * r);
  }

  /// Pressure at `points` by the composite trapezoid rule on n equispaced
  /// nodes. C_u = −∫H/u / ∫1/u and p(x) = −∫₀^x (H + C_u)/u.
  static std::vector<double> pressure(double m0, std::span<const double> coeffs, std::size_t n,
                                      std::span<const double> points, const Antiderivative& source) {
    require(n >= 2, "trapezoid rule needs at least two nodes");
    const double h = 1.0 / static_cast<double>(n - 1);
    auto field = [&](double s) {
      // sin(iπs) by the three-term recurrence.
      const double th = std::numbers::pi * s;
      const double two_cos = 2.0 * std::cos(th);
      double prev = 0.0, cur = std::sin(th), sum = 0.0;
      for (std::size_t i = 0; i < coeffs.size(); ++i) {
        sum += coeffs[i] * cur;
        const double next = two_cos * cur - prev;
        prev = cur;
        cur = next;
      }
      const double u = m0 + std::sqrt(2.0) * sum;
      if (!(u > 0.0)) throw ValidationError("diffusion coefficient is not positive at s = " + std::to_string(s));
      return u;
    };
    std::vector<double> inv(n), hinv(n), cum_inv(n, 0.0), cum_hinv(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = static_cast<double>(k) * h;
      inv[k] = 1.0 / field(s);
      hinv[k] = source(s) * inv[k];
      if (k > 0) {
        cum_inv[k] = cum_inv[k - 1] + 0.5 * h * (inv[k - 1] + inv[k]);
        cum_hinv[k] = cum_hinv[k - 1] + 0.5 * h * (hinv[k - 1] + hinv[k]);
      }
    }
    const double c_u = -cum_hinv[n - 1] / cum_inv[n - 1];
    std::vector<double> p(points.size());
    for (std::size_t m = 0; m < points.size(); ++m) {
      const double x = points[m];
      const auto k = std::min(static_cast<std::size_t>(x / h), n - 2);
      const double sk = static_cast<double>(k) * h;
      const double ix = 1.0 / field(x);
      const double part = x - sk;
      const double i1 = cum_inv[k] + 0.5 * part * (inv[k] + ix);
      const double ih = cum_hinv[k] + 0.5 * part * (hinv[k] + source(x) * ix);
      p[m] = -(ih + c_u * i1);
    }
    return p;
  }

  /// G_j with N_j nodes, h = 1 (H(s) = s); j is the number of coefficients.
  [[nodiscard]] std::vector<double> forward(std::span<const double> coeffs) const {
    return forward(coeffs, quadrature_points(coeffs.size()));
  }
  [[nodiscard]] std::vector<double> forward(std::span<const double> coeffs, std::size_t n) const {
    return pressure(m0_, coeffs, n, points_, [](double s) { return s; });
  }

  /// max over prior draws u ∈ X_{2j} of ‖G_j(Π_j u) − G_{2j}(u)‖.
  [[nodiscard]] double observation_gap(std::size_t j, std::size_t draws, std::uint64_t seed) const {
    require(j >= 1 && draws >= 1, "observation gap needs j ≥ 1 and at least one draw");
    double worst = 0.0;
    const StreamKey root = StreamKey::root(seed).child(Phase::pilot);
    for (std::size_t d = 0; d < draws; ++d) {
      Stream rng(root.replicate(d));
      std::vector<double> u(2 * j);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = coefficient_bound(i + 1) * (2.0 * rng.uniform() - 1.0);
      const auto coarse = forward(std::span<const double>(u).first(j));
      const auto fine = forward(u);
      double s = 0.0;
      for (std::size_t k = 0; k < coarse.size(); ++k) s += (coarse[k] - fine[k]) * (coarse[k] - fine[k]);
      worst = std::max(worst, std::sqrt(s));
    }
    return worst;
  }

  /// Synthetic data: G at u_i = ½(−1)^{i+1} u*_i, i ≤ 64, on a fine grid.
  [[nodiscard]] std::vector<double> synthetic_data() const {
    std::vector<double> u(64);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * (i % 2 == 0 ? 1.0 : -1.0) * coefficient_bound(i + 1);
    return forward(u, 20001);
  }

  /// The independence-sampler view: uniform box prior, Gaussian misfit, θ work exponent.
  [[nodiscard]] independence::UniformPriorModel prior_model(std::vector<double> data, double alpha_star = 0.0) const {
    independence::UniformPriorModel m;
    const double g = gamma_;
    m.u_star = [g](std::size_t k) { return std::pow(static_cast<double>(k), -g); };
    m.forward = [self = *this](std::span<const double> x) { return self.forward(x); };
    m.alpha_star = alpha_star > 0.0 ? alpha_star : default_alpha_star(data);
    m.data = std::move(data);
    m.cost_exponent = theta();
    return m;
  }

 private:
  double gamma_;
  double m0_;
  std::vector<double> points_;
};

}  // namespace ubmc::models
