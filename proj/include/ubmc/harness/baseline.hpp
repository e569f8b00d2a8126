#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/estimator.hpp"
#include "ubmc/rng.hpp"

namespace ubmc::harness {

struct ErgodicResult {
  std::vector<double> averages;  // one time-average per restart
  double mse = 0.0;              // mean squared error against the reference value
  double work = 0.0;             // steps × step_work per restart
};

/// Time-averages (1/n) Σ_{k=1}^{n} f(X_k) from x0 over independent restarts;
/// restart r uses StreamKey::root(seed).child(baseline).replicate(r).
template <class State, class Kernel, class F>
ErgodicResult ergodic_baseline(const Kernel& kernel, const F& f, const State& x0, std::size_t steps,
                               std::size_t restarts, std::uint64_t seed, double reference,
                               unsigned parallel = 1, double step_work = 1.0) {
  require(steps >= 1, "ergodic baseline needs n ≥ 1");
  require(restarts >= 1, "ergodic baseline needs at least one restart");
  ErgodicResult out;
  out.averages.assign(restarts, 0.0);
  const StreamKey root = StreamKey::root(seed).child(Phase::baseline);
  parallel_for(restarts, parallel, [&](std::size_t r) {
    Stream rng(root.replicate(r));
    State x = x0;
    double sum = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      x = kernel(x, rng);
      sum += f(x);
    }
    out.averages[r] = sum / static_cast<double>(steps);
  });
  for (double a : out.averages) out.mse += (a - reference) * (a - reference);
  out.mse /= static_cast<double>(restarts);
  out.work = static_cast<double>(steps) * step_work;
  return out;
}

/// Draws of one estimator: values and per-draw work.
struct EstimatorSample {
  std::vector<double> values;
  std::vector<double> work;
};

struct Comparison {
  double baseline_product = 0.0;
  double unbiased_product = 0.0;
  double ratio = 0.0;  // unbiased / baseline
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t resamples = 0;
};

/// mean((v − reference)²) × mean(work).
inline double msework_product(const EstimatorSample& s, double reference) {
  require(!s.values.empty() && s.values.size() == s.work.size(), "estimator sample needs paired values and work");
  double mse = 0.0, work = 0.0;
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    mse += (s.values[k] - reference) * (s.values[k] - reference);
    work += s.work[k];
  }
  return (mse / static_cast<double>(s.values.size())) * (work / static_cast<double>(s.values.size()));
}

/// Ratio of MSE-work products with a pivotal bootstrap 95% interval; each side
/// is resampled independently.
inline Comparison compare_msework(const EstimatorSample& baseline, const EstimatorSample& unbiased,
                                  double reference, std::size_t resamples = 1000, std::uint64_t seed = 0) {
  require(resamples >= 10, "bootstrap needs at least ten resamples");
  Comparison c;
  c.baseline_product = msework_product(baseline, reference);
  c.unbiased_product = msework_product(unbiased, reference);
  require(c.baseline_product > 0.0 && c.unbiased_product > 0.0,
          "MSE-work comparison is degenerate: a product is zero");
  c.ratio = c.unbiased_product / c.baseline_product;
  c.resamples = resamples;
  Stream rng(StreamKey::root(seed).child(Phase::bootstrap));
  auto resample = [&rng](const EstimatorSample& s) {
    EstimatorSample out;
    const std::size_t n = s.values.size();
    out.values.resize(n);
    out.work.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto idx = std::min<std::size_t>(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
      out.values[k] = s.values[idx];
      out.work[k] = s.work[idx];
    }
    return out;
  };
  std::vector<double> ratios;
  ratios.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    const double pb = msework_product(resample(baseline), reference);
    const double pu = msework_product(resample(unbiased), reference);
    if (pb > 0.0) ratios.push_back(pu / pb);
  }
  require(ratios.size() >= 10, "bootstrap resamples are degenerate");
  std::sort(ratios.begin(), ratios.end());
  auto quantile = [&ratios](double q) {
    const double pos = q * static_cast<double>(ratios.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, ratios.size() - 1);
    return ratios[lo] + (pos - static_cast<double>(lo)) * (ratios[hi] - ratios[lo]);
  };
  c.ci_low = 2.0 * c.ratio - quantile(0.975);
  c.ci_high = 2.0 * c.ratio - quantile(0.025);
  return c;
}

}  // namespace ubmc::harness
