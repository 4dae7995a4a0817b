#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/rng.hpp"
#include "rdp/tensor.hpp"

namespace rdp {

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;
  bool operator==(const Point2&) const = default;
};

struct LabeledPoint {
  Point2 x;
  int label = 0;
  bool operator==(const LabeledPoint&) const = default;
};

struct SpiralParams {
  std::size_t n_samples = 16384;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_samples < 2) throw ValidationError("n must be at least 2");
    if (n_samples % 2 != 0) throw ValidationError("n must be even");
  }
};

/// The class-0 / class-1 points generated from one angle. Both share the
/// radius α/2π; the class-1 point sits at α+π, i.e. the point reflection of
/// the class-0 point through the origin.
inline std::array<LabeledPoint, 2> spiral_pair(double alpha) {
  const double radius = alpha / (2.0 * std::numbers::pi);
  const Point2 p{radius * std::sin(alpha), radius * std::cos(alpha)};
  // sin(α+π) = −sin α and cos(α+π) = −cos α; negating keeps the reflection exact.
  return {LabeledPoint{p, 0}, LabeledPoint{{-p.x1, -p.x2}, 1}};
}

/// The n/2 angles α₁ ~ U[0, 2π) that drive generate_spiral.
inline std::vector<double> spiral_angles(const SpiralParams& params) {
  params.validate();
  Xoshiro256 rng(derive_seed(params.seed, stream::kSpiral));
  std::vector<double> angles(params.n_samples / 2);
  for (double& a : angles) a = 2.0 * std::numbers::pi * rng.uniform();
  return angles;
}

/// Two-arm spiral: all class-0 points first, then the paired class-1 points
/// in the same order.
inline std::vector<LabeledPoint> generate_spiral(const SpiralParams& params) {
  const auto angles = spiral_angles(params);
  const std::size_t half = angles.size();
  std::vector<LabeledPoint> points(2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    const auto pair = spiral_pair(angles[i]);
    points[i] = pair[0];
    points[half + i] = pair[1];
  }
  return points;
}

struct GridProbe {
  std::vector<Point2> points;
  std::size_t axis_resolution = 0;

  /// Coordinate of index i along either axis.
  static double axis_value(std::size_t i, std::size_t resolution) {
    if (i + 1 == resolution) return 1.0;
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(resolution - 1);
  }

  Tensor as_tensor() const {
    Tensor t({points.size(), 2});
    for (std::size_t i = 0; i < points.size(); ++i) {
      t.at(i, 0) = points[i].x1;
      t.at(i, 1) = points[i].x2;
    }
    return t;
  }
};

/// resolution² points over [−1, 1]², x₂ outer and x₁ inner.
inline GridProbe generate_grid(std::size_t axis_resolution = 50) {
  if (axis_resolution < 2) throw ValidationError("grid resolution must be at least 2");
  GridProbe grid;
  grid.axis_resolution = axis_resolution;
  grid.points.reserve(axis_resolution * axis_resolution);
  for (std::size_t r = 0; r < axis_resolution; ++r)
    for (std::size_t c = 0; c < axis_resolution; ++c)
      grid.points.push_back({GridProbe::axis_value(c, axis_resolution), GridProbe::axis_value(r, axis_resolution)});
  return grid;
}

struct Batch {
  Tensor x;  // B×2
  std::vector<int> y;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return y.size(); }
};

inline Batch make_batch(std::span<const LabeledPoint> data, std::span<const std::size_t> indices) {
  Batch batch{Tensor({indices.size(), 2}), std::vector<int>(indices.size()),
              std::vector<std::size_t>(indices.begin(), indices.end())};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const LabeledPoint& p = data[indices[i]];
    batch.x.at(i, 0) = p.x.x1;
    batch.x.at(i, 1) = p.x.x2;
    batch.y[i] = p.label;
  }
  return batch;
}

inline Batch make_batch(std::span<const LabeledPoint> data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(data, all);
}

/// Seeded Fisher–Yates permutation of [0, n).
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Xoshiro256 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

/// One epoch of shuffled batches. The final batch may be partial.
class BatchIterator {
 public:
  BatchIterator(std::span<const LabeledPoint> data, std::size_t batch_size, std::uint64_t epoch_seed)
      : data_(data), batch_size_(batch_size) {
    if (data.empty()) throw ValidationError("cannot iterate an empty dataset");
    if (batch_size == 0) throw ValidationError("batch size must be at least 1");
    order_ = shuffled_indices(data.size(), epoch_seed);
  }

  std::size_t batch_count() const noexcept { return (order_.size() + batch_size_ - 1) / batch_size_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }

  bool next(Batch& out) {
    if (cursor_ >= order_.size()) return false;
    const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
    out = make_batch(data_, std::span(order_).subspan(cursor_, end - cursor_));
    cursor_ = end;
    return true;
  }

 private:
  std::span<const LabeledPoint> data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// printf "%.17g": shortest fixed width that round-trips every double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_points_csv(std::ostream& out, std::span<const LabeledPoint> points) {
  out << "x1,x2,label\n";
  for (const auto& p : points) out << format_double(p.x.x1) << ',' << format_double(p.x.x2) << ',' << p.label << '\n';
}

}  // namespace rdp
