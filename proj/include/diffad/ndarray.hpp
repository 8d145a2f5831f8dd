#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffad {

using Shape = std::vector<std::size_t>;

/// Thrown when array extents disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces NaN/Inf or otherwise cannot proceed numerically.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles. Every extent is positive and
/// size() == product(shape()).
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(Shape shape, double fill = 0.0);
  NdArray(Shape shape, std::vector<double> data);

  static NdArray scalar(double value);
  static NdArray zeros_like(const NdArray& other) { return NdArray(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  /// Scalar value of a one-element array.
  double item() const;

  NdArray reshaped(Shape shape) const;
  bool all_finite() const;
  void fill(double value);

  /// Throws NumericError naming `where` if any element is NaN/Inf.
  void require_finite(const std::string& where) const;

  friend bool operator==(const NdArray&, const NdArray&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

double max_abs_diff(const NdArray& a, const NdArray& b);

}  // namespace diffad
