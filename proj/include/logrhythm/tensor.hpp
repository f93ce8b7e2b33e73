#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace logrhythm {

/// Dense row-major real tensor. The last axis is always the log-frequency
/// (bin) axis and, for rank >= 2, the second-to-last axis is time (frames).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0)
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  /// Flat offset of a full index tuple; throws std::out_of_range.
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  /// Number of elements in one slice along the last axis (bins).
  std::size_t bins() const { return shape_.empty() ? 0 : shape_.back(); }
  /// Number of frames (second-to-last axis), or 1 for rank-1 tensors.
  std::size_t frames() const {
    return shape_.size() < 2 ? 1 : shape_[shape_.size() - 2];
  }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace logrhythm
