#pragma once

#include <cmath>
#include <utility>

#include "ubmc/errors.hpp"
#include "ubmc/rng.hpp"

namespace ubmc::models {

/// X' = ρX + √(1−ρ²)ξ. Stationary law N(0, 1).
class ContractingNormals {
 public:
  explicit ContractingNormals(double rho) : rho_(rho), noise_scale_(std::sqrt(1.0 - rho * rho)) {
    require(rho >= 0.0 && rho < 1.0, "contracting normals needs ρ in [0, 1)");
  }

  [[nodiscard]] double rho() const noexcept { return rho_; }

  [[nodiscard]] double step(double x, double xi) const noexcept { return rho_ * x + noise_scale_ * xi; }

  /// Shared-noise coupling; the gap contracts by exactly ρ.
  [[nodiscard]] std::pair<double, double> coupled_step(double x, double y, double xi) const noexcept {
    return {step(x, xi), step(y, xi)};
  }

  template <NoiseSource R>
  double operator()(double x, R& rng) const {
    return step(x, rng.normal());
  }

  template <NoiseSource R>
  std::pair<double, double> operator()(double x, double y, R& rng) const {
    return coupled_step(x, y, rng.normal());
  }

 private:
  double rho_;
  double noise_scale_;
};

}  // namespace ubmc::models
