#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "rdp/dataset.hpp"

using namespace rdp;

TEST(Spiral, PairAtQuarterTurn) {
  const auto pair = spiral_pair(std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(pair[0].x.x1, 0.25);
  EXPECT_NEAR(pair[0].x.x2, 0.0, 1e-16);
  EXPECT_EQ(pair[0].label, 0);
  EXPECT_DOUBLE_EQ(pair[1].x.x1, -0.25);
  EXPECT_NEAR(pair[1].x.x2, 0.0, 1e-16);
  EXPECT_EQ(pair[1].label, 1);
}

TEST(Spiral, ClassOneIsExactReflectionOfClassZero) {
  const auto points = generate_spiral({.n_samples = 2048, .seed = 9});
  ASSERT_EQ(points.size(), 2048u);
  const std::size_t half = points.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    EXPECT_EQ(points[i].label, 0);
    EXPECT_EQ(points[half + i].label, 1);
    EXPECT_EQ(points[half + i].x.x1, -points[i].x.x1);
    EXPECT_EQ(points[half + i].x.x2, -points[i].x.x2);
  }
}

TEST(Spiral, CoordinatesInsideOpenSquareAndOnArm) {
  const auto points = generate_spiral({.n_samples = 4096, .seed = 3});
  for (const auto& p : points) {
    EXPECT_GT(p.x.x1, -1.0);
    EXPECT_LT(p.x.x1, 1.0);
    EXPECT_GT(p.x.x2, -1.0);
    EXPECT_LT(p.x.x2, 1.0);
    EXPECT_LT(std::hypot(p.x.x1, p.x.x2), 1.0);
  }
  // Class-0 points satisfy r = α/2π with α recovered from the direction.
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& p = points[i].x;
    double alpha = std::atan2(p.x1, p.x2);
    if (alpha < 0) alpha += 2 * std::numbers::pi;
    EXPECT_NEAR(std::hypot(p.x1, p.x2), alpha / (2 * std::numbers::pi), 1e-12);
  }
}

TEST(Spiral, AnglesPassKolmogorovSmirnovUniformity) {
  auto angles = spiral_angles({.n_samples = 16384, .seed = 0});
  ASSERT_EQ(angles.size(), 8192u);
  std::sort(angles.begin(), angles.end());
  double d = 0.0;
  const double n = static_cast<double>(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double f = angles[i] / (2 * std::numbers::pi);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));
  EXPECT_GE(angles.front(), 0.0);
  EXPECT_LT(angles.back(), 2 * std::numbers::pi);
}

TEST(Spiral, DeterministicPerSeed) {
  EXPECT_EQ(generate_spiral({.n_samples = 64, .seed = 5}), generate_spiral({.n_samples = 64, .seed = 5}));
  EXPECT_NE(generate_spiral({.n_samples = 64, .seed = 5}), generate_spiral({.n_samples = 64, .seed = 6}));
}

TEST(Spiral, RejectsOddOrTinySampleCounts) {
  try {
    generate_spiral({.n_samples = 3});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "n must be even");
  }
  EXPECT_THROW(generate_spiral({.n_samples = 0}), ValidationError);
  EXPECT_THROW(generate_spiral({.n_samples = 1}), ValidationError);
  EXPECT_EQ(generate_spiral({.n_samples = 2}).size(), 2u);
}

TEST(Grid, DefaultResolutionCoversSquare) {
  const GridProbe grid = generate_grid();
  ASSERT_EQ(grid.points.size(), 2500u);
  EXPECT_EQ(grid.points.front(), (Point2{-1.0, -1.0}));
  EXPECT_EQ(grid.points.back(), (Point2{1.0, 1.0}));
  // x₁ varies fastest.
  EXPECT_EQ(grid.points[1].x2, -1.0);
  EXPECT_NEAR(grid.points[1].x1, -1.0 + 2.0 / 49.0, 1e-15);
  EXPECT_EQ(grid.points[50].x1, -1.0);
  std::set<double> xs;
  for (const auto& p : grid.points) xs.insert(p.x1);
  EXPECT_EQ(xs.size(), 50u);
  const Tensor t = grid.as_tensor();
  EXPECT_EQ(t.shape(), (Shape{2500, 2}));
  EXPECT_EQ(t.at(2499, 0), 1.0);
}

TEST(Grid, SmallResolutions) {
  const GridProbe two = generate_grid(2);
  EXPECT_EQ(two.points, (std::vector<Point2>{{-1, -1}, {1, -1}, {-1, 1}, {1, 1}}));
  const GridProbe three = generate_grid(3);
  ASSERT_EQ(three.points.size(), 9u);
  EXPECT_EQ(three.points[4], (Point2{0.0, 0.0}));
  EXPECT_THROW(generate_grid(1), ValidationError);
}

TEST(Batching, SixtyFourFullBatchesAtDefaultSize) {
  const auto data = generate_spiral({});
  BatchIterator it(data, 256, 1);
  EXPECT_EQ(it.batch_count(), 64u);
  Batch batch;
  std::size_t count = 0;
  while (it.next(batch)) {
    EXPECT_EQ(batch.size(), 256u);
    ++count;
  }
  EXPECT_EQ(count, 64u);
}

TEST(Batching, EachIndexOncePerEpochWithPartialTail) {
  const auto data = generate_spiral({.n_samples = 1000, .seed = 2});
  BatchIterator it(data, 256, 77);
  EXPECT_EQ(it.batch_count(), 4u);
  std::vector<int> seen(data.size(), 0);
  std::vector<std::size_t> sizes;
  Batch batch;
  while (it.next(batch)) {
    sizes.push_back(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::size_t idx = batch.indices[i];
      ++seen[idx];
      EXPECT_EQ(batch.x.at(i, 0), data[idx].x.x1);
      EXPECT_EQ(batch.x.at(i, 1), data[idx].x.x2);
      EXPECT_EQ(batch.y[i], data[idx].label);
    }
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{256, 256, 256, 232}));
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST(Batching, ShuffleIsSeededPermutation) {
  const auto a = shuffled_indices(500, 4);
  EXPECT_EQ(a, shuffled_indices(500, 4));
  EXPECT_NE(a, shuffled_indices(500, 5));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Batching, RejectsEmptyDataAndZeroBatch) {
  std::vector<LabeledPoint> empty;
  EXPECT_THROW(BatchIterator(empty, 4, 0), ValidationError);
  const auto data = generate_spiral({.n_samples = 4});
  EXPECT_THROW(BatchIterator(data, 0, 0), ValidationError);
}

TEST(Csv, HeaderAndRoundTrippableValues) {
  const auto data = generate_spiral({.n_samples = 16384});
  std::ostringstream out;
  write_points_csv(out, data);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 16385);
  EXPECT_EQ(text.substr(0, 12), "x1,x2,label\n");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto comma = line.find(',');
  EXPECT_EQ(std::stod(line.substr(0, comma)), data[0].x.x1);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}
