#include "cstte/numcore/array.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cstte/error.hpp"

namespace cstte::num {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

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

namespace {

void check_extents(const Shape& shape) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("array extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  values_.assign(element_count(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_extents(shape_);
  if (values_.size() != element_count(shape_)) {
    throw DimensionError("shape " + shape_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " values, got " +
                         std::to_string(values_.size()));
  }
}

Array Array::scalar(double v) { return Array(Shape{}, std::vector<double>{v}); }

Array Array::vector(std::vector<double> values) {
  const auto n = values.size();
  return Array(Shape{n}, std::move(values));
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Array(Shape{r, c}, std::move(values));
}

std::size_t Array::rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }

std::size_t Array::cols() const { return shape_.empty() ? 1 : shape_.back(); }

double Array::item() const {
  if (values_.size() != 1) {
    throw ContractError("item() on array of shape " + shape_string(shape_));
  }
  return values_[0];
}

void Array::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Array Array::reshaped(Shape shape) const {
  if (element_count(shape) != values_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Array(std::move(shape), values_);
}

bool Array::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace cstte::num
