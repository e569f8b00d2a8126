#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ubmc/errors.hpp"

namespace ubmc {

/// Largest dimension or step count a schedule factory will emit. Levels whose
/// raw value exceeds it are dropped; their survival probability is negligible.
inline constexpr double kScheduleValueCap = 9.0e15;

/// Rounds up, then enforces v_i ≥ v_{i-1} + 1.
inline std::vector<std::uint64_t> strictly_increasing_ceil(std::span<const double> raw) {
  std::vector<std::uint64_t> out;
  out.reserve(raw.size());
  for (double r : raw) {
    if (!(r <= kScheduleValueCap)) break;
    auto v = static_cast<std::uint64_t>(std::max(1.0, std::ceil(r)));
    if (!out.empty()) v = std::max(v, out.back() + 1);
    out.push_back(v);
  }
  return out;
}

inline void require_strictly_increasing(std::span<const std::uint64_t> v, const char* what) {
  require(!v.empty(), std::string(what) + " schedule is empty");
  require(v.front() >= 1, std::string(what) + " schedule must start at 1 or more");
  for (std::size_t i = 1; i < v.size(); ++i)
    require(v[i] > v[i - 1], std::string(what) + " schedule must be strictly increasing at index " +
                                 std::to_string(i));
}

/// Steps a_i per level and, for transdimensional problems, dimensions j_i.
/// Finite tables; a level past the end is an error.
class LevelSchedule {
 public:
  LevelSchedule(std::vector<std::uint64_t> steps, std::vector<std::uint64_t> dims = {})
      : steps_(std::move(steps)), dims_(std::move(dims)) {
    require_strictly_increasing(steps_, "step");
    if (!dims_.empty()) {
      require(dims_.size() >= steps_.size(), "dimension schedule shorter than step schedule");
      dims_.resize(steps_.size());
      require(dims_.front() >= 1, "dimension schedule must start at 1 or more");
      for (std::size_t i = 1; i < dims_.size(); ++i)
        require(dims_[i] >= dims_[i - 1], "dimension schedule must be nondecreasing at index " +
                                              std::to_string(i));
    }
  }

  /// a_i = slope·i + offset.
  static LevelSchedule affine(std::uint64_t slope, std::uint64_t offset, std::size_t levels) {
    require(slope >= 1 && offset >= 1 && levels >= 1, "affine schedule needs slope, offset, levels ≥ 1");
    std::vector<std::uint64_t> a(levels);
    for (std::size_t i = 0; i < levels; ++i) a[i] = slope * i + offset;
    return LevelSchedule(std::move(a));
  }

  [[nodiscard]] std::size_t levels() const noexcept { return steps_.size(); }
  [[nodiscard]] bool transdimensional() const noexcept { return !dims_.empty(); }

  [[nodiscard]] std::uint64_t steps(std::size_t i) const {
    if (i >= steps_.size()) throw std::out_of_range("level " + std::to_string(i) + " beyond schedule");
    return steps_[i];
  }
  [[nodiscard]] std::uint64_t dim(std::size_t i) const {
    if (dims_.empty()) return 0;
    if (i >= dims_.size()) throw std::out_of_range("level " + std::to_string(i) + " beyond schedule");
    return dims_[i];
  }

  [[nodiscard]] std::span<const std::uint64_t> steps() const noexcept { return steps_; }
  [[nodiscard]] std::span<const std::uint64_t> dims() const noexcept { return dims_; }

 private:
  std::vector<std::uint64_t> steps_;
  std::vector<std::uint64_t> dims_;
};

}  // namespace ubmc
