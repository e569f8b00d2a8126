#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/rng.hpp"
#include "ubmc/stats.hpp"
#include "ubmc/survival.hpp"

namespace ubmc {

/// Values an estimator can average: a scalar or a fixed-length real vector.
template <class V>
concept EstimandValue = std::same_as<V, double> || std::same_as<V, std::vector<double>>;

namespace value {

inline std::span<const double> components(const double& x) { return {&x, 1}; }
inline std::span<const double> components(const std::vector<double>& x) { return x; }

inline double difference(double a, double b) { return a - b; }
inline std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "vector-valued level values must have a fixed length");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return d;
}

inline void add_scaled(double& acc, double x, double w) { acc += w * x; }
inline void add_scaled(std::vector<double>& acc, const std::vector<double>& x, double w) {
  if (acc.empty()) acc.assign(x.size(), 0.0);
  require(acc.size() == x.size(), "vector-valued level values must have a fixed length");
  for (std::size_t k = 0; k < x.size(); ++k) acc[k] += w * x[k];
}

template <EstimandValue V>
bool finite(const V& x) {
  for (double c : components(x))
    if (!std::isfinite(c)) return false;
  return true;
}

}  // namespace value

/// One output of a level-difference generator.
template <EstimandValue V>
struct LevelSample {
  V delta{};
  double work = 0.0;
  std::uint64_t dim = 0;  // dimension of the finest state used, 0 when not applicable
};

/// A (level, stream) -> LevelSample callable. Each call must depend only on its
/// arguments so that distinct streams give independent differences.
template <class G, class V>
concept LevelGenerator = requires(const G& g, std::size_t level, Stream& s) {
  { g(level, s) } -> std::convertible_to<LevelSample<V>>;
};

template <EstimandValue V>
struct LevelRecord {
  std::size_t level = 0;
  V delta{};
  double survival = 1.0;
  double work = 0.0;
};

template <EstimandValue V>
struct UnbiasedDraw {
  V value{};
  std::size_t level = 0;  // N
  double work = 0.0;      // Σ_{i ≤ N} t_i
  std::uint64_t level_max_dim = 0;
  std::vector<LevelRecord<V>> levels;  // filled only on request
};

/// Z = Σ_{i=0}^{n} Δ_i / F̄_i with a fixed truncation level n. Level i draws
/// from the stream key.level(i).
template <EstimandValue V, LevelGenerator<V> G>
UnbiasedDraw<V> estimate_at_level(const G& gen, const SurvivalDistribution& survival,
                                  std::size_t n, StreamKey key, bool keep_levels = false) {
  UnbiasedDraw<V> draw;
  draw.level = n;
  for (std::size_t i = 0; i <= n; ++i) {
    const double weight = survival(i);
    if (!(weight > 0.0)) throw NonFiniteError("survival vanishes at a sampled level", i);
    Stream stream(key.level(i));
    LevelSample<V> s = gen(i, stream);
    if (!value::finite(s.delta)) throw NonFiniteError("non-finite level difference", i);
    value::add_scaled(draw.value, s.delta, 1.0 / weight);
    draw.work += s.work;
    draw.level_max_dim = std::max(draw.level_max_dim, s.dim);
    if (keep_levels) draw.levels.push_back({i, s.delta, weight, s.work});
  }
  return draw;
}

/// One unbiased draw: N from key.child(truncation), then the level sum.
template <EstimandValue V, LevelGenerator<V> G>
UnbiasedDraw<V> estimate_once(const G& gen, const SurvivalDistribution& survival, StreamKey key,
                              bool keep_levels = false) {
  Stream trunc(key.child(Phase::truncation));
  const std::size_t n = survival.sample(trunc);
  return estimate_at_level<V>(gen, survival, n, key, keep_levels);
}

template <EstimandValue V>
struct BatchResult {
  std::vector<UnbiasedDraw<V>> draws;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> standard_error;
  double mean_work = 0.0;
  double total_work = 0.0;
};

struct BatchOptions {
  unsigned parallel = 1;
  bool keep_levels = false;
};

/// Runs `body(r)` for r in [0, count) on `parallel` workers. Exceptions are
/// collected per index and the lowest-index one is rethrown, so failures do
/// not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned parallel, const Body& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        body(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Summary statistics of per-draw values, reduced in replicate order.
template <EstimandValue V>
void summarize(BatchResult<V>& out) {
  const auto& draws = out.draws;
  if (draws.empty()) return;
  const std::size_t arity = value::components(draws.front().value).size();
  out.mean.assign(arity, 0.0);
  out.variance.assign(arity, 0.0);
  out.standard_error.assign(arity, 0.0);
  std::vector<double> column(draws.size());
  for (std::size_t k = 0; k < arity; ++k) {
    for (std::size_t r = 0; r < draws.size(); ++r) {
      const auto c = value::components(draws[r].value);
      require(c.size() == arity, "vector-valued draws must have a fixed length");
      column[r] = c[k];
    }
    const auto m = stats::moments(column);
    out.mean[k] = m.mean;
    out.variance[k] = m.variance;
    out.standard_error[k] = m.standard_error();
  }
  out.total_work = 0.0;
  for (const auto& d : draws) out.total_work += d.work;
  out.mean_work = out.total_work / static_cast<double>(draws.size());
}

/// L independent draws; replicate r uses StreamKey::root(seed).replicate(r).
template <EstimandValue V, LevelGenerator<V> G>
BatchResult<V> estimate_batch(const G& gen, const SurvivalDistribution& survival,
                              std::size_t replicates, std::uint64_t seed,
                              BatchOptions options = {}) {
  require(replicates >= 1, "estimate_batch needs at least one replicate");
  BatchResult<V> out;
  out.draws.resize(replicates);
  const StreamKey root = StreamKey::root(seed);
  parallel_for(replicates, options.parallel, [&](std::size_t r) {
    out.draws[r] = estimate_once<V>(gen, survival, root.replicate(r), options.keep_levels);
  });
  summarize(out);
  return out;
}

/// Σ_{i ≤ last} ν_i / F̄_i, the second moment of Z.
inline double second_moment_formula(std::span<const double> nus,
                                    const SurvivalDistribution& survival,
                                    std::size_t last) {
  require(last < nus.size(), "second_moment_formula: truncation index beyond supplied ν");
  double sum = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    require(std::isfinite(nus[i]), "second_moment_formula: ν must be finite");
    const double f = survival(i);
    require(f > 0.0, "second_moment_formula: F̄ vanishes at index " + std::to_string(i));
    sum += nus[i] / f;
  }
  return sum;
}

inline double second_moment_formula(std::span<const double> nus,
                                    const SurvivalDistribution& survival) {
  require(!nus.empty(), "second_moment_formula needs at least one ν");
  return second_moment_formula(nus, survival, nus.size() - 1);
}

/// Σ_{i ≤ last} t_i F̄_i, the expected work.
inline double expected_work(std::span<const double> ts, const SurvivalDistribution& survival,
                            std::size_t last) {
  require(last < ts.size(), "expected_work: truncation index beyond supplied t");
  double sum = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    require(ts[i] >= 0.0, "expected_work: work must be nonnegative");
    sum += ts[i] * survival(i);
  }
  return sum;
}

inline double expected_work(std::span<const double> ts, const SurvivalDistribution& survival) {
  require(!ts.empty(), "expected_work needs at least one t");
  return expected_work(ts, survival, ts.size() - 1);
}

}  // namespace ubmc
