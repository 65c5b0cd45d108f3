#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace npmca {

class Rng;

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

/// 64-byte aligned storage. Eigen picks its vectorized summation order from
/// the buffer address, so without this, results could change in the last bit
/// between processes with different heap layouts.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major array of doubles. Value type; reshape on an rvalue reuses
/// the buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
  static Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);
  static Tensor normal(Shape shape, Rng& rng, double stddev = 1.0);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }
  std::vector<double> vec() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Row-major accessors for rank 2 and rank 3 tensors.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const double& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const double& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  Tensor reshaped(Shape s) const&;
  Tensor reshaped(Shape s) &&;

  void fill(double v);
  bool all_finite() const;
  double sum() const;
  double max_abs() const;

 private:
  Shape shape_;
  Storage data_;
};

/// max |a - b| over matching shapes; throws ShapeError otherwise.
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Bitwise equality of shape and payload.
bool identical(const Tensor& a, const Tensor& b);

/// Trainable tensor with its gradient accumulator.
struct ParamTensor {
  Tensor value;
  Tensor grad;
  bool trainable = true;

  ParamTensor() = default;
  explicit ParamTensor(Tensor v) : value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

}  // namespace npmca
