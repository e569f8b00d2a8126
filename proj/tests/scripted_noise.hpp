#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

/// NoiseSource replaying fixed uniform and normal sequences; throws when a
/// sequence runs out.
class ScriptedNoise {
 public:
  ScriptedNoise(std::vector<double> uniforms, std::vector<double> normals)
      : uniforms_(std::move(uniforms)), normals_(std::move(normals)) {}

  double uniform() {
    if (next_u_ >= uniforms_.size()) throw std::out_of_range("scripted uniforms exhausted");
    return uniforms_[next_u_++];
  }
  double normal() {
    if (next_n_ >= normals_.size()) throw std::out_of_range("scripted normals exhausted");
    return normals_[next_n_++];
  }
  [[nodiscard]] std::size_t uniforms_used() const { return next_u_; }
  [[nodiscard]] std::size_t normals_used() const { return next_n_; }

 private:
  std::vector<double> uniforms_;
  std::vector<double> normals_;
  std::size_t next_u_ = 0;
  std::size_t next_n_ = 0;
};

/// NoiseSource whose k-th draw (either kind) returns k, for stream audits.
class CountingNoise {
 public:
  double uniform() { return static_cast<double>(count_++); }
  double normal() { return static_cast<double>(count_++); }
  [[nodiscard]] std::size_t used() const { return count_; }

 private:
  std::size_t count_ = 0;
};
