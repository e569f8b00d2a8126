#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/rng.hpp"

namespace ubmc {

/// Law of the truncation level N, stored as its survival function
/// F̄_i = P(N ≥ i). Always normalized so that F̄_0 = 1.
class SurvivalDistribution {
 public:
  enum class Family { geometric, polynomial, tabulated };
  enum class Tail { zero, geometric };

  static constexpr std::size_t kMaxLevel = 1'000'000'000;

  /// F̄_i = rate^(exponent·i). The per-level ratio rate^exponent must lie in (0, 1).
  static SurvivalDistribution geometric(double rate, double exponent) {
    require(rate > 0.0 && std::isfinite(rate) && std::isfinite(exponent),
            "geometric survival needs a finite positive rate");
    const double ratio = std::pow(rate, exponent);
    require(ratio > 0.0 && ratio < 1.0, "geometric survival needs rate^exponent in (0, 1), got " +
                                            std::to_string(ratio));
    SurvivalDistribution s(Family::geometric);
    s.rate_ = rate;
    s.exponent_ = exponent;
    s.ratio_ = ratio;
    return s;
  }

  /// F̄_i = (i+1)^(-t).
  static SurvivalDistribution polynomial(double t) {
    require(t > 0.0 && std::isfinite(t), "polynomial survival needs t > 0");
    SurvivalDistribution s(Family::polynomial);
    s.exponent_ = t;
    return s;
  }

  /// Explicit F̄_0..F̄_{n-1}, continued by the tail rule. A geometric tail
  /// multiplies by `tail_ratio` per level after the table ends.
  static SurvivalDistribution tabulated(std::vector<double> head, Tail tail = Tail::zero,
                                        double tail_ratio = 0.0) {
    require(!head.empty() && head.front() == 1.0, "tabulated survival needs F̄_0 = 1");
    for (std::size_t i = 1; i < head.size(); ++i) {
      require(head[i] >= 0.0 && head[i] <= head[i - 1],
              "tabulated survival must be nonincreasing and nonnegative at index " +
                  std::to_string(i));
    }
    if (tail == Tail::geometric) {
      require(tail_ratio > 0.0 && tail_ratio <= 1.0, "geometric tail ratio must lie in (0, 1]");
    }
    SurvivalDistribution s(Family::tabulated);
    s.table_ = std::move(head);
    s.tail_ = tail;
    s.ratio_ = tail == Tail::geometric ? tail_ratio : 0.0;
    return s;
  }

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] double rate() const noexcept { return rate_; }
  [[nodiscard]] double exponent() const noexcept { return exponent_; }
  [[nodiscard]] double ratio() const noexcept { return ratio_; }
  [[nodiscard]] Tail tail() const noexcept { return tail_; }
  [[nodiscard]] const std::vector<double>& table() const noexcept { return table_; }

  /// F̄_i.
  [[nodiscard]] double operator()(std::size_t i) const {
    switch (family_) {
      case Family::geometric:
        return std::pow(ratio_, static_cast<double>(i));
      case Family::polynomial:
        return std::pow(static_cast<double>(i) + 1.0, -exponent_);
      case Family::tabulated:
        if (i < table_.size()) return table_[i];
        if (tail_ == Tail::zero) return 0.0;
        return table_.back() * std::pow(ratio_, static_cast<double>(i + 1 - table_.size()));
    }
    return 0.0;
  }

  /// N = max{ i : F̄_i > u } for u ∈ (0, 1).
  [[nodiscard]] std::size_t sample(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("truncation uniform must lie in (0, 1)");
    double guess = 0.0;
    switch (family_) {
      case Family::geometric:
        guess = std::ceil(std::log(u) / std::log(ratio_)) - 1.0;
        break;
      case Family::polynomial:
        guess = std::ceil(std::pow(u, -1.0 / exponent_)) - 2.0;
        break;
      case Family::tabulated: {
        std::size_t n = 0;
        while (n + 1 < table_.size() && table_[n + 1] > u) ++n;
        if (n + 1 < table_.size() || tail_ == Tail::zero || !(table_.back() > u)) return n;
        if (ratio_ >= 1.0) throw_cap();
        guess = static_cast<double>(table_.size() - 1) +
                std::ceil(std::log(u / table_.back()) / std::log(ratio_)) - 1.0;
        break;
      }
    }
    if (!(guess < static_cast<double>(kMaxLevel))) throw_cap();
    auto n = static_cast<std::size_t>(std::max(guess, 0.0));
    // The closed forms can be off by one at rounding boundaries.
    while ((*this)(n + 1) > u) {
      if (++n > kMaxLevel) throw_cap();
    }
    while (n > 0 && !((*this)(n) > u)) --n;
    return n;
  }

  template <NoiseSource R>
  [[nodiscard]] std::size_t sample(R& rng) const {
    return sample(static_cast<double>(rng.uniform()));
  }

 private:
  explicit SurvivalDistribution(Family f) : family_(f) {}

  [[noreturn]] static void throw_cap() {
    throw std::runtime_error("truncation level exceeds the 1e9 iteration cap; survival tail is malformed");
  }

  Family family_;
  double rate_ = 0.0;
  double exponent_ = 0.0;
  double ratio_ = 0.0;
  std::vector<double> table_;
  Tail tail_ = Tail::zero;
};

}  // namespace ubmc
