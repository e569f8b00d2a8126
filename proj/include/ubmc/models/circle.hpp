#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "ubmc/rng.hpp"

namespace ubmc::models {

/// X' = X + U[−2, 2] mod 2π, with the maximal coupling of two copies.
class CircleChain {
 public:
  static constexpr double kTwoPi = 2.0 * std::numbers::pi;
  static constexpr double kHalfWidth = 2.0;

  struct Interval {
    double lo;
    double hi;
    [[nodiscard]] double length() const noexcept { return hi - lo; }
  };
  using ArcSet = std::vector<Interval>;  // disjoint, sorted, inside [0, 2π)

  struct CoupledMove {
    double first;
    double second;
    bool met;
  };

  static double wrap(double x) noexcept {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r >= kTwoPi ? 0.0 : r;
  }

  /// Support A_x = [x−2, x+2] mod 2π as at most two intervals.
  static ArcSet arc(double x) {
    const double lo = wrap(x) - kHalfWidth;
    const double hi = wrap(x) + kHalfWidth;
    ArcSet s;
    if (lo < 0.0) {
      s.push_back({0.0, hi});
      s.push_back({lo + kTwoPi, kTwoPi});
    } else if (hi > kTwoPi) {
      s.push_back({0.0, hi - kTwoPi});
      s.push_back({lo, kTwoPi});
    } else {
      s.push_back({lo, hi});
    }
    std::sort(s.begin(), s.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    return s;
  }

  static ArcSet intersect(const ArcSet& a, const ArcSet& b) {
    ArcSet out;
    for (const auto& p : a)
      for (const auto& q : b) {
        const double lo = std::max(p.lo, q.lo);
        const double hi = std::min(p.hi, q.hi);
        if (hi > lo) out.push_back({lo, hi});
      }
    std::sort(out.begin(), out.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    return out;
  }

  /// a \ b.
  static ArcSet subtract(const ArcSet& a, const ArcSet& b) {
    ArcSet out;
    for (const auto& p : a) {
      ArcSet pieces{p};
      for (const auto& q : b) {
        ArcSet next;
        for (const auto& r : pieces) {
          if (q.hi <= r.lo || q.lo >= r.hi) {
            next.push_back(r);
            continue;
          }
          if (q.lo > r.lo) next.push_back({r.lo, q.lo});
          if (q.hi < r.hi) next.push_back({q.hi, r.hi});
        }
        pieces = std::move(next);
      }
      out.insert(out.end(), pieces.begin(), pieces.end());
    }
    return out;
  }

  static double measure(const ArcSet& s) noexcept {
    double m = 0.0;
    for (const auto& i : s) m += i.length();
    return m;
  }

  /// Uniform point of a nonempty set from one uniform variate.
  static double uniform_on(const ArcSet& s, double u) {
    double t = u * measure(s);
    for (const auto& i : s) {
      if (t < i.length()) return i.lo + t;
      t -= i.length();
    }
    return s.back().hi;
  }

  static double overlap(double x, double y) { return measure(intersect(arc(x), arc(y))); }

  template <NoiseSource R>
  double operator()(double x, R& rng) const {
    return wrap(x + kHalfWidth * (2.0 * rng.uniform() - 1.0));
  }

  /// With probability |A_x ∩ A_y|/4 both move to one uniform point of the
  /// overlap; otherwise each moves uniformly on its own residual arc.
  template <NoiseSource R>
  CoupledMove maximal_coupling(double x, double y, R& rng) const {
    const ArcSet ax = arc(x);
    const ArcSet ay = arc(y);
    const ArcSet common = intersect(ax, ay);
    const double p_meet = measure(common) / (2.0 * kHalfWidth);
    if (rng.uniform() < p_meet) {
      const double z = uniform_on(common, rng.uniform());
      return {z, z, true};
    }
    const double zx = uniform_on(subtract(ax, ay), rng.uniform());
    const double zy = uniform_on(subtract(ay, ax), rng.uniform());
    return {zx, zy, false};
  }

  template <NoiseSource R>
  std::pair<double, double> operator()(double x, double y, R& rng) const {
    const auto m = maximal_coupling(x, y, rng);
    return {m.first, m.second};
  }
};

}  // namespace ubmc::models
