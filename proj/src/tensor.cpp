#include "npmca/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "npmca/errors.hpp"
#include "npmca/rng.hpp"

namespace npmca {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

namespace {
void check_shape(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : s)
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(s));
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  check_shape(shape_);
  if (data_.size() != shape_numel(shape_))
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = rng.uniform(lo, hi);
  return t;
}

Tensor Tensor::normal(Shape shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = stddev * rng.normal();
  return t;
}

Tensor Tensor::reshaped(Shape s) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(s));
}

Tensor Tensor::reshaped(Shape s) && {
  if (shape_numel(s) != data_.size())
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
  check_shape(s);
  shape_ = std::move(s);
  return std::move(*this);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(double)) == 0);
}

}  // namespace npmca
