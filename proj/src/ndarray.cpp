#include "diffad/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace diffad {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

static void check_extents(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("zero extent in shape " + shape_string(shape));
  }
}

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

NdArray NdArray::scalar(double value) { return NdArray({1}, std::vector<double>{value}); }

std::size_t NdArray::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

double& NdArray::at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
double NdArray::at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
double& NdArray::at(std::size_t i, std::size_t j, std::size_t k) {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double NdArray::at(std::size_t i, std::size_t j, std::size_t k) const {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}

double NdArray::item() const {
  if (data_.size() != 1) throw ShapeError("item() on array of shape " + shape_string(shape_));
  return data_[0];
}

NdArray NdArray::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return NdArray(std::move(shape), data_);
}

bool NdArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void NdArray::require_finite(const std::string& where) const {
  if (!all_finite()) throw NumericError("non-finite value in " + where);
}

double max_abs_diff(const NdArray& a, const NdArray& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace diffad
