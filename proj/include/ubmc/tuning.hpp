#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/survival.hpp"

namespace ubmc::tuning {

/// Exact ν_i for contracting normals started at 0 with f(x) = x:
/// ν₀ = 1 − ρ^{2a₀}, ν_i = ρ^{2a_{i−1}}(1 − ρ^{2(a_i − a_{i−1})}).
inline std::vector<double> nu_contracting_normals(double rho, std::span<const std::uint64_t> a) {
  require(rho >= 0.0 && rho < 1.0, "ν formula needs ρ in [0, 1)");
  require(!a.empty(), "ν formula needs a step schedule");
  std::vector<double> nu(a.size());
  auto pw = [rho](double e) { return e == 0.0 ? 1.0 : std::pow(rho, e); };
  nu[0] = 1.0 - pw(2.0 * static_cast<double>(a[0]));
  for (std::size_t i = 1; i < a.size(); ++i) {
    require(a[i] > a[i - 1], "step schedule must be strictly increasing");
    nu[i] = pw(2.0 * static_cast<double>(a[i - 1])) * (1.0 - pw(2.0 * static_cast<double>(a[i] - a[i - 1])));
  }
  return nu;
}

struct MseWorkReport {
  double variance_term = 0.0;  // Σ ν_i/F̄_i − (EY)²
  double expected_work = 0.0;  // Σ F̄_i t_i
  double product = 0.0;
  bool work_divergent = false;  // the last work term is not negligible
};

/// MSE-work product of a survival choice over the supplied levels. Levels with
/// ν_i = 0 contribute nothing to the variance, even where F̄_i = 0.
inline MseWorkReport msework_report(std::span<const double> nus, std::span<const double> ts,
                                    const SurvivalDistribution& survival, double mean = 0.0) {
  require(nus.size() == ts.size() && !nus.empty(), "ν and t must have equal nonzero length");
  MseWorkReport r;
  double second = 0.0;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const double f = survival(i);
    if (nus[i] != 0.0) {
      require(f > 0.0, "survival vanishes where ν is nonzero at index " + std::to_string(i));
      second += nus[i] / f;
    }
    r.expected_work += ts[i] * f;
  }
  r.variance_term = second - mean * mean;
  r.product = r.variance_term * r.expected_work;
  r.work_divergent = ts.back() * survival(ts.size() - 1) > 1e-8 * r.expected_work;
  return r;
}

struct OptimalSurvival {
  SurvivalDistribution survival;
  double product;        // (Σ ν_i/F̄_i)(Σ F̄_i t_i) over the supplied levels
  bool work_divergent;   // expected work is not converging over the supplied levels
};

/// F̄_i = √(ν_i/t_i)/√(ν₀/t₀), continued geometrically past the table with
/// the last observed ratio.
inline OptimalSurvival optimal_survival(std::span<const double> nus, std::span<const double> ts) {
  require(nus.size() == ts.size() && !nus.empty(), "ν and t must have equal nonzero length");
  for (std::size_t i = 0; i < nus.size(); ++i)
    require(nus[i] >= 0.0 && ts[i] > 0.0, "ν must be nonnegative and t positive at index " + std::to_string(i));
  require(nus[0] > 0.0, "ν₀ must be positive");
  const double base = std::sqrt(nus[0]) / std::sqrt(ts[0]);
  std::vector<double> head(nus.size());
  head[0] = 1.0;
  for (std::size_t i = 1; i < nus.size(); ++i) {
    if (nus[i] / ts[i] > nus[i - 1] / ts[i - 1])
      throw ValidationError("optimal survival infeasible: ν_i/t_i increases at index " + std::to_string(i));
    head[i] = std::min(head[i - 1], std::sqrt(nus[i]) / std::sqrt(ts[i]) / base);
  }
  double tail_ratio = 0.0;
  if (head.size() >= 2 && head[head.size() - 2] > 0.0) tail_ratio = head.back() / head[head.size() - 2];
  auto survival = tail_ratio > 0.0
                      ? SurvivalDistribution::tabulated(head, SurvivalDistribution::Tail::geometric, tail_ratio)
                      : SurvivalDistribution::tabulated(head);
  const auto report = msework_report(nus, ts, survival);
  return {survival, report.product, report.work_divergent};
}

/// Index after which ν_i/F̄_i < 10^{-14} × running sum, capped at 10^4.
inline std::size_t series_truncation(std::span<const double> nus, const SurvivalDistribution& survival) {
  double running = 0.0;
  const std::size_t cap = std::min<std::size_t>(nus.size(), 10'000);
  for (std::size_t i = 0; i < cap; ++i) {
    const double f = survival(i);
    const double term = nus[i] == 0.0 ? 0.0 : nus[i] / f;
    running += term;
    if (i > 0 && term < 1e-14 * running) return i;
  }
  return cap == 0 ? 0 : cap - 1;
}

/// (1+ρ)/(1−ρ): asymptotic variance × steps of the ergodic average.
inline double ergodic_msework_limit(double rho) {
  require(rho >= 0.0 && rho < 1.0, "ergodic limit needs ρ in [0, 1)");
  return (1.0 + rho) / (1.0 - rho);
}

struct SeriesValue {
  double value;
  double error;  // bound on the omitted remainder plus rounding allowance
};

/// Li_{−1/2}(z) = Σ_{k≥1} √k z^k for z ∈ [0, 1 − 10^{-6}].
inline SeriesValue polylog_minus_half(double z) {
  require(z >= 0.0, "polylog argument must be nonnegative");
  require(z <= 1.0 - 1e-6, "polylog argument too close to 1 for series summation");
  if (z == 0.0) return {0.0, 0.0};
  double sum = 0.0;
  double power = 1.0;
  for (std::uint64_t k = 1;; ++k) {
    power *= z;
    const double term = std::sqrt(static_cast<double>(k)) * power;
    sum += term;
    // Successive term ratios z√((k+1)/k) decrease towards z.
    const double ratio = z * std::sqrt(static_cast<double>(k + 1) / static_cast<double>(k));
    if (ratio < 1.0 && term < 1e-14 * sum) {
      const double remainder = term * ratio / (1.0 - ratio);
      return {sum, remainder + 1e-15 * static_cast<double>(k) * sum};
    }
    if (k > 100'000'000) throw std::runtime_error("polylog series failed to converge");
  }
}

/// (ρ^{−m} √(m(1−ρ^{2m})) Li_{−1/2}(ρ^m))², the optimal product for a_i = m(i+1).
inline double unbiased_msework_closed_form(double rho, std::uint64_t m) {
  require(rho > 0.0 && rho < 1.0, "closed form needs ρ in (0, 1)");
  require(m >= 1, "closed form needs m ≥ 1");
  const double md = static_cast<double>(m);
  const double z = std::pow(rho, md);
  const double root = std::sqrt(md * (1.0 - z * z)) * polylog_minus_half(z).value / z;
  return root * root;
}

/// The ρ-free objective (e^{−w} √(1−e^{2w}) Li_{−1/2}(e^w) √|w|)², w = m ln ρ.
inline double w_objective(double w) {
  require(w < 0.0, "w objective needs w < 0");
  const double z = std::exp(w);
  const double root = std::sqrt(1.0 - z * z) * polylog_minus_half(z).value * std::sqrt(-w) / z;
  return root * root;
}

/// Golden-section minimizer of w_objective on (lo, hi).
inline double optimal_w(double lo = -10.0, double hi = -1e-3, double tol = 1e-4) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = w_objective(c), fd = w_objective(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = w_objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = w_objective(d);
    }
  }
  return 0.5 * (a + b);
}

/// m = ⌈w / ln ρ⌉.
inline std::uint64_t optimal_m(double rho, double w) {
  require(rho > 0.0 && rho < 1.0, "optimal m needs ρ in (0, 1)");
  require(w < 0.0, "optimal m needs w < 0");
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(w / std::log(rho))));
}

struct PartialKnowledge {
  std::vector<double> head;  // F̄_0..F̄_{i0}
  double tail_constant = 0.0;  // F̄_i = C ρ̃^{a_{i−1}} for i > i0
  double product = 0.0;        // objective value with ν̂ up to i0 and ν(ρ̃) beyond
  std::size_t sweeps = 0;

  [[nodiscard]] double survival_at(std::size_t i, double rho_bound, std::span<const std::uint64_t> a) const {
    if (i < head.size()) return head[i];
    return tail_constant * std::pow(rho_bound, static_cast<double>(a[i - 1]));
  }
};

/// Minimizes (Σ ν_i/F̄_i)(Σ a_i F̄_i) over F̄_1..F̄_{i0} and the tail constant C,
/// with ν_i = ν̂_i for i ≤ i0 and ν_i = ν_i(ρ̃) for i0 < i ≤ î, subject to
/// 1 ≥ F̄_1 ≥ … ≥ F̄_{i0} ≥ C ρ̃^{a_{i0}}. Cyclic coordinate descent: each
/// coordinate has a closed-form minimizer, clamped to its feasible interval.
inline PartialKnowledge partial_knowledge_optimize(std::span<const double> exact_nus, double rho_bound,
                                                   std::span<const std::uint64_t> a, std::size_t truncation) {
  require(exact_nus.size() >= 2, "partial knowledge needs i0 ≥ 1");
  require(rho_bound > 0.0 && rho_bound < 1.0, "bound rate ρ̃ must lie in (0, 1)");
  const std::size_t i0 = exact_nus.size() - 1;
  require(truncation > i0 && truncation < a.size(), "truncation must satisfy i0 < î < len(a)");
  for (double v : exact_nus) require(v >= 0.0, "exact ν must be nonnegative");
  require(exact_nus[0] > 0.0, "ν̂₀ must be positive");

  auto pw = [rho_bound](std::uint64_t e) { return std::pow(rho_bound, static_cast<double>(e)); };
  // Tail sums with F̄_i = C ρ̃^{a_{i−1}}: variance P/C, work C·Q.
  double tail_p = 0.0, tail_q = 0.0;
  for (std::size_t i = i0 + 1; i <= truncation; ++i) {
    const double g = pw(a[i - 1]);
    tail_p += g * (1.0 - pw(2 * (a[i] - a[i - 1])));
    tail_q += static_cast<double>(a[i]) * g;
  }
  require(tail_q > 0.0, "tail work vanishes; raise the truncation index");
  const double link = pw(a[i0]);  // F̄*_{i0+1}(C) = C·link

  std::vector<double> t(i0 + 1);
  for (std::size_t i = 0; i <= i0; ++i) t[i] = static_cast<double>(a[i]);
  std::vector<double> f(i0 + 1);
  const double base = std::sqrt(exact_nus[0] / t[0]);
  f[0] = 1.0;
  for (std::size_t i = 1; i <= i0; ++i) f[i] = std::min(f[i - 1], std::sqrt(exact_nus[i] / t[i]) / base);
  const double nu_next = pw(2 * a[i0]) * (1.0 - pw(2 * (a[i0 + 1] - a[i0])));
  double c = std::min(std::sqrt(nu_next / static_cast<double>(a[i0 + 1])) / base / link, f[i0] / link);

  auto sums = [&](double& s, double& w) {
    s = tail_p / c;
    w = c * tail_q;
    for (std::size_t i = 0; i <= i0; ++i) {
      if (exact_nus[i] != 0.0) s += exact_nus[i] / f[i];
      w += t[i] * f[i];
    }
  };
  require(c > 0.0, "infeasible start: tail constant vanishes");

  PartialKnowledge out;
  double s = 0.0, w = 0.0;
  sums(s, w);
  double objective = s * w;
  for (std::size_t sweep = 1; sweep <= 100'000; ++sweep) {
    for (std::size_t k = 1; k <= i0; ++k) {
      const double rest_s = s - (exact_nus[k] != 0.0 ? exact_nus[k] / f[k] : 0.0);
      const double rest_w = w - t[k] * f[k];
      const double upper = f[k - 1];
      const double lower = k < i0 ? f[k + 1] : c * link;
      double x = rest_s > 0.0 ? std::sqrt(exact_nus[k] * rest_w / (t[k] * rest_s)) : upper;
      x = std::clamp(x, lower, upper);
      if (x <= 0.0) throw ValidationError("partial knowledge constraints infeasible at index " + std::to_string(k));
      f[k] = x;
      s = rest_s + (exact_nus[k] != 0.0 ? exact_nus[k] / x : 0.0);
      w = rest_w + t[k] * x;
    }
    {
      const double rest_s = s - tail_p / c;
      const double rest_w = w - c * tail_q;
      const double upper = f[i0] / link;
      double x = rest_s > 0.0 ? std::sqrt(tail_p * rest_w / (tail_q * rest_s)) : upper;
      x = std::min(x, upper);
      if (!(x > 0.0)) x = upper;
      c = x;
      s = rest_s + tail_p / c;
      w = rest_w + c * tail_q;
    }
    sums(s, w);  // refresh to avoid drift
    const double next = s * w;
    out.sweeps = sweep;
    const bool converged = std::abs(objective - next) <= 1e-15 * next;
    objective = next;
    if (converged) break;
  }
  out.head = f;
  out.tail_constant = c;
  out.product = objective;
  return out;
}

}  // namespace ubmc::tuning
