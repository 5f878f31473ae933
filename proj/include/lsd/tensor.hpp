#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "lsd/error.hpp"

namespace lsd {

// Dense row-major tensor. Rank is dynamic; most of the model uses rank 1
// (vectors) and rank 2 (matrices). Scalars are shape {1}.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(numel_of(shape_), T(0)) {}

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel_of(shape_)) {
      throw InvalidInputError("tensor data length does not match shape");
    }
  }

  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }

  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Row-major element access for matrices.
  T& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
  const T& at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  static std::size_t numel_of(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

}  // namespace lsd
