#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"
#include "ubmc/pcn.hpp"
#include "ubmc/rng.hpp"

namespace ubmc::models {

/// log h(z) = −log(1 + e^{−z}) without overflow.
inline double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Bayesian logistic regression with a N(0, I) prior on β.
class Logistic {
 public:
  /// Design rows (z₁, z₂, 1) with z ~ N(0, 1) columns from `seed`; labels drawn
  /// from the model at `beta_true`.
  static Logistic synthetic(std::size_t rows = 100, std::uint64_t seed = 2019,
                            std::vector<double> beta_true = {1.0, -1.0, 0.5}) {
    require(beta_true.size() == 3, "synthetic logistic design has three features");
    Logistic m;
    m.dim_ = 3;
    m.design_.resize(rows * 3);
    m.labels_.resize(rows);
    Stream rng(StreamKey::root(seed).child(Phase::start));
    for (std::size_t i = 0; i < rows; ++i) {
      m.design_[3 * i] = rng.normal();
      m.design_[3 * i + 1] = rng.normal();
      m.design_[3 * i + 2] = 1.0;
    }
    for (std::size_t i = 0; i < rows; ++i) {
      double eta = 0.0;
      for (std::size_t k = 0; k < 3; ++k) eta += beta_true[k] * m.design_[3 * i + k];
      m.labels_[i] = rng.uniform() < sigmoid(eta) ? 1 : -1;
    }
    return m;
  }

  /// Explicit design (row-major, rows × dim) and labels in {−1, 1}.
  static Logistic from_data(std::size_t dim, std::vector<double> design, std::vector<int> labels) {
    require(dim >= 1, "logistic model needs a positive dimension");
    require(design.size() == labels.size() * dim, "design size must equal rows × dim");
    for (int y : labels) require(y == 1 || y == -1, "labels must be ±1");
    Logistic m;
    m.dim_ = dim;
    m.design_ = std::move(design);
    m.labels_ = std::move(labels);
    return m;
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t rows() const noexcept { return labels_.size(); }
  [[nodiscard]] std::span<const double> design() const noexcept { return design_; }
  [[nodiscard]] std::span<const int> labels() const noexcept { return labels_; }

  [[nodiscard]] double margin(std::size_t i, std::span<const double> beta) const {
    double eta = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) eta += beta[k] * design_[i * dim_ + k];
    return labels_[i] * eta;
  }

  /// −½‖β‖² + Σ log h(y_i βᵀT_i).
  [[nodiscard]] double log_density(std::span<const double> beta) const {
    require(beta.size() == dim_, "β has the wrong dimension");
    double s = 0.0;
    for (double b : beta) s -= 0.5 * b * b;
    for (std::size_t i = 0; i < rows(); ++i) s += log_sigmoid(margin(i, beta));
    return s;
  }

  [[nodiscard]] std::vector<double> gradient(std::span<const double> beta) const {
    require(beta.size() == dim_, "β has the wrong dimension");
    std::vector<double> g(beta.begin(), beta.end());
    for (double& v : g) v = -v;
    for (std::size_t i = 0; i < rows(); ++i) {
      const double w = labels_[i] * sigmoid(-margin(i, beta));
      for (std::size_t k = 0; k < dim_; ++k) g[k] += w * design_[i * dim_ + k];
    }
    return g;
  }

 private:
  Logistic() = default;
  std::size_t dim_ = 0;
  std::vector<double> design_;
  std::vector<int> labels_;
};

/// Gaussian approximation N(c, C) of the posterior.
struct ReferenceFit {
  std::vector<double> center;
  std::vector<double> covariance;  // row-major
  std::vector<double> cholesky;    // row-major lower factor of covariance
  double acceptance_rate = 0.0;
};

/// Lower Cholesky factor of a symmetric matrix after adding `jitter` to the
/// diagonal; throws if it is not positive definite.
inline std::vector<double> cholesky_factor(std::span<const double> cov, std::size_t d, double jitter = 1e-9) {
  Eigen::MatrixXd m(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m(r, c) = 0.5 * (cov[r * d + c] + cov[c * d + r]);
  m.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
  Eigen::MatrixXd l = llt.matrixL();
  std::vector<double> out(d * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = l(r, c);
  return out;
}

/// Random-walk Metropolis from β = 0; the first tenth of the steps is
/// discarded, the rest give the mean and the symmetrized covariance.
inline ReferenceFit logistic_reference_fit(const Logistic& model, std::size_t rwm_steps, std::uint64_t seed,
                                           double step_size = 0.35) {
  require(rwm_steps >= 10'000, "reference fit needs at least 10^4 steps");
  require(step_size > 0.0, "RWM step size must be positive");
  const std::size_t d = model.dim();
  Stream rng(StreamKey::root(seed).child(Phase::pilot));
  std::vector<double> beta(d, 0.0), prop(d);
  double logp = model.log_density(beta);
  const std::size_t burn = rwm_steps / 10;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::size_t accepted = 0;
  for (std::size_t n = 0; n < rwm_steps; ++n) {
    for (std::size_t k = 0; k < d; ++k) prop[k] = beta[k] + step_size * rng.normal();
    const double logq = model.log_density(prop);
    if (std::log(rng.uniform()) <= std::min(0.0, logq - logp)) {
      beta = prop;
      logp = logq;
      ++accepted;
    }
    if (n >= burn) {
      const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(d));
      sum += b;
      outer += b * b.transpose();
    }
  }
  const auto kept = static_cast<double>(rwm_steps - burn);
  const Eigen::VectorXd mean = sum / kept;
  const Eigen::MatrixXd cov = (outer - kept * mean * mean.transpose()) / (kept - 1.0);
  ReferenceFit fit;
  fit.center.assign(mean.data(), mean.data() + d);
  fit.covariance.resize(d * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c)
      fit.covariance[r * d + c] = 0.5 * (cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +
                                         cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)));
  for (std::size_t k = 0; k < d; ++k) fit.covariance[k * d + k] += 1e-9;
  fit.cholesky = cholesky_factor(fit.covariance, d, 0.0);
  fit.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(rwm_steps);
  return fit;
}

/// pCN targeting the posterior with reference N(c, C): the potential is
/// ĝ(β) = −log π(β) + log φ_{c,C}(β), so N(c, C) itself would be preserved.
inline pcn::Model modified_pcn(const Logistic& model, double rho, std::vector<double> center,
                               std::vector<double> cholesky) {
  const std::size_t d = model.dim();
  require(center.size() == d && cholesky.size() == d * d, "reference (c, C) has the wrong dimension");
  pcn::Model m;
  m.rho = rho;
  m.center = center;
  m.cholesky = cholesky;
  m.lambda = [](std::size_t) { return 1.0; };
  m.cost_exponent = 0.0;
  m.potential = [model, center, cholesky, d](std::span<const double> beta) {
    // ½(β−c)ᵀC⁻¹(β−c) = ½‖L⁻¹(β−c)‖² by forward substitution.
    std::vector<double> z(d);
    double quad = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double s = beta[r] - center[r];
      for (std::size_t c = 0; c < r; ++c) s -= cholesky[r * d + c] * z[c];
      z[r] = s / cholesky[r * d + r];
      quad += z[r] * z[r];
    }
    return -model.log_density(beta) - 0.5 * quad;
  };
  m.validate(d);
  return m;
}

/// Identity reference N(0, I).
inline pcn::Model plain_pcn(const Logistic& model, double rho) {
  const std::size_t d = model.dim();
  std::vector<double> eye(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) eye[k * d + k] = 1.0;
  return modified_pcn(model, rho, std::vector<double>(d, 0.0), std::move(eye));
}

}  // namespace ubmc::models
