#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"

namespace rdp {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major float64 array.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
  }
  static Tensor scalar(double value) { return Tensor({}, std::vector<double>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Row count for a matrix view: rank-1 tensors are 1×n, scalars 1×1.
  std::size_t rows() const noexcept { return shape_.size() >= 2 ? shape_[0] : 1; }
  std::size_t cols() const noexcept {
    if (shape_.empty()) return 1;
    if (shape_.size() == 1) return shape_[0];
    return std::accumulate(shape_.begin() + 1, shape_.end(), std::size_t{1}, std::multiplies<>{});
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  double item() const {
    if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
  }

  bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Bitwise-meaningful equality: same shape and elementwise ==.
  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Forward kernels shared by the tape and the tape-free inference path, so
/// both produce identical values.
namespace kernels {

inline void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
}

/// a[m×k]·b[k×n], or a[m×k]·b[n×k]ᵀ when transpose_b.
inline Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.rows(), k = a.cols();
  const std::size_t bk = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != bk) {
    throw DimensionError("matmul inner dimensions disagree: " + shape_string(a.shape()) +
                         (transpose_b ? " x transpose of " : " x ") + shape_string(b.shape()));
  }
  Tensor out({m, n});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = out.data().data();
  if (transpose_b) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * B[j * k + p];
        C[i * n + j] = acc;
      }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * B[p * n + j];
        C[i * n + j] = acc;
      }
  }
  return out;
}

/// True when b is added row-wise to every row of a (b is 1×n or length-n).
inline bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) return false;
  const bool row_shape = (b.rank() == 1 && b.shape()[0] == a.cols()) ||
                         (b.rank() == 2 && b.shape()[0] == 1 && b.shape()[1] == a.cols());
  return row_shape && a.shape() != b.shape();
}

inline Tensor add_broadcast(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
  }
  if (!is_row_broadcast(a, b)) {
    throw DimensionError("cannot add " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  Tensor out = a;
  const std::size_t n = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  return out;
}

inline void validate_mask(const Tensor& x, const Tensor& mask) {
  if (x.rank() != 2 || mask.rank() != 2 || mask.cols() != 1 || mask.rows() != x.rows()) {
    throw DimensionError("mask of shape " + shape_string(mask.shape()) + " does not fit input " +
                         shape_string(x.shape()));
  }
  for (double v : mask.data()) {
    if (v != 0.0 && v != 1.0) throw ValidationError("mask entries must be 0 or 1, got " + std::to_string(v));
  }
}

inline Tensor mul_mask(const Tensor& x, const Tensor& mask) {
  validate_mask(x, mask);
  Tensor out = x;
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] *= mask[r];
  return out;
}

inline Tensor scale(const Tensor& x, double s) {
  Tensor out = x;
  for (double& v : out.data()) v *= s;
  return out;
}

/// Standard normal CDF.
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Exact GELU, x·Φ(x).
inline double gelu(double x) noexcept { return x * normal_cdf(x); }
inline double gelu_derivative(double x) noexcept { return normal_cdf(x) + x * normal_pdf(x); }

inline Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = gelu(v);
  return out;
}

/// 1 − mask, used for the complementary branch of a stage-2 block.
inline Tensor complement(const Tensor& mask) {
  Tensor out = mask;
  for (double& v : out.data()) v = 1.0 - v;
  return out;
}

}  // namespace kernels
}  // namespace rdp
