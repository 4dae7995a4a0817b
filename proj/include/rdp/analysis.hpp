#pragma once

// Feature-reuse analysis on the grid probe: layer-similarity matrices, the
// H×(2N+1) feature panel and the similarity heatmap, as SVG and CSV.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdp/dataset.hpp"
#include "rdp/errors.hpp"
#include "rdp/model.hpp"
#include "rdp/svg.hpp"

namespace rdp {

/// Pairwise layer similarity s = 1/(1+d), d the mean over grid points of the
/// Euclidean distance between two layers' feature rows. Layer 0 is the
/// pre-block output.
struct SimilarityMatrix {
  std::size_t layers = 0;  // N + 1
  std::vector<double> similarity;
  std::vector<double> distance;

  double at(std::size_t l, std::size_t m) const { return similarity[l * layers + m]; }
  double distance_at(std::size_t l, std::size_t m) const { return distance[l * layers + m]; }

  double min() const { return similarity.empty() ? 1.0 : *std::min_element(similarity.begin(), similarity.end()); }
};

inline double mean_row_distance(const Tensor& a, const Tensor& b) {
  const std::size_t rows = a.rows(), cols = a.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = a[r * cols + c] - b[r * cols + c];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(rows);
}

inline SimilarityMatrix layer_similarity(const FeatureStack& features) {
  if (features.layers.empty()) throw ValidationError("feature stack has no layers");
  const std::size_t count = features.layers.size();
  for (const Tensor& layer : features.layers) {
    if (layer.shape() != features.layers.front().shape()) throw DimensionError("feature layers differ in shape");
  }
  SimilarityMatrix out{count, std::vector<double>(count * count, 1.0), std::vector<double>(count * count, 0.0)};
  for (std::size_t l = 0; l < count; ++l)
    for (std::size_t m = l + 1; m < count; ++m) {
      const double d = mean_row_distance(features.layers[l], features.layers[m]);
      out.distance[l * count + m] = out.distance[m * count + l] = d;
      out.similarity[l * count + m] = out.similarity[m * count + l] = 1.0 / (1.0 + d);
    }
  return out;
}

inline void write_square_csv(std::ostream& out, std::size_t n, std::span<const double> values) {
  out << "layer";
  for (std::size_t m = 0; m < n; ++m) out << ',' << m;
  out << '\n';
  for (std::size_t l = 0; l < n; ++l) {
    out << l;
    for (std::size_t m = 0; m < n; ++m) out << ',' << format_double(values[l * n + m]);
    out << '\n';
  }
}

inline void write_similarity_csv(std::ostream& out, const SimilarityMatrix& s) {
  write_square_csv(out, s.layers, s.similarity);
}

/// The `.dist.csv` variant: raw mean distances.
inline void write_distance_csv(std::ostream& out, const SimilarityMatrix& s) {
  write_square_csv(out, s.layers, s.distance);
}

/// `layer,node,x1,x2,value` for the requested layers and nodes.
inline void write_feature_csv(std::ostream& out, const FeatureStack& features, std::span<const std::size_t> layers,
                              std::span<const std::size_t> nodes) {
  out << "layer,node,x1,x2,value\n";
  for (std::size_t l : layers) {
    const Tensor& layer = features.layers.at(l);
    for (std::size_t node : nodes)
      for (std::size_t g = 0; g < features.points(); ++g) {
        out << l << ',' << node << ',' << format_double(features.grid_input.at(g, 0)) << ','
            << format_double(features.grid_input.at(g, 1)) << ',' << format_double(layer.at(g, node)) << '\n';
      }
  }
}

enum class ColorBounds {
  kPerNodeSymmetric,   // each cell scaled to ±max|value| of that node
  kPerLayerSymmetric,  // one ±max|value| per layer column
};

struct PanelSpec {
  std::vector<std::size_t> layers;  // subset of 0..N; 0 is the pre-block output
  std::vector<std::size_t> nodes;   // subset of 0..H−1
  std::size_t grid_resolution = 50;
  ColorBounds bounds = ColorBounds::kPerNodeSymmetric;
  std::size_t scatter_limit = 400;  // training points drawn on the final column

  void validate(const ResidualMLP& model) const {
    if (layers.empty() || nodes.empty()) throw ValidationError("panel needs at least one layer and one node");
    auto increasing = [](const std::vector<std::size_t>& v) { return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>{}) == v.end(); };
    if (!increasing(layers) || !increasing(nodes)) throw ValidationError("panel indices must be strictly increasing");
    if (layers.back() > model.depth()) throw ValidationError("panel layer index exceeds model depth");
    if (nodes.back() >= model.hidden()) throw ValidationError("panel node index exceeds hidden width");
    if (grid_resolution < 2) throw ValidationError("grid resolution must be at least 2");
  }
};

/// min(limit, count) evenly spaced integers from [first, first + count).
inline std::vector<std::size_t> evenly_spaced(std::size_t first, std::size_t count, std::size_t limit) {
  const std::size_t k = std::min(limit, count);
  std::vector<std::size_t> out;
  if (k == 0) return out;
  if (k == 1) return {first + count - 1};
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(first + static_cast<std::size_t>(std::llround(static_cast<double>(i) * (count - 1) / (k - 1))));
  }
  return out;
}

/// Layers 1..N and nodes 0..H−1, each thinned to at most `limit`.
inline PanelSpec default_panel_spec(std::size_t depth, std::size_t hidden, std::size_t limit = 8) {
  PanelSpec spec;
  spec.layers = evenly_spaced(1, depth, limit);
  spec.nodes = evenly_spaced(0, hidden, limit);
  return spec;
}

namespace detail {

inline constexpr double kCellSize = 60.0;
inline constexpr double kCellGap = 8.0;
inline constexpr double kMarginLeft = 56.0;
inline constexpr double kMarginTop = 28.0;
inline constexpr double kMinStroke = 0.2;
inline constexpr double kMaxStroke = 4.0;
inline constexpr double kStrokePerUnitWeight = 2.0;

inline double stroke_width(double weight) {
  return std::clamp(kStrokePerUnitWeight * std::abs(weight), kMinStroke, kMaxStroke);
}

/// Raster of grid values, x₂ = +1 on top; equal horizontal runs merged.
inline std::string raster(std::span<const double> values, std::size_t resolution, double range) {
  const double px = kCellSize / static_cast<double>(resolution);
  std::string out;
  for (std::size_t r = 0; r < resolution; ++r) {
    const double y = static_cast<double>(resolution - 1 - r) * px;
    std::size_t c = 0;
    while (c < resolution) {
      const auto color = svg::diverging(range > 0.0 ? values[r * resolution + c] / range : 0.0);
      std::size_t end = c + 1;
      while (end < resolution &&
             svg::diverging(range > 0.0 ? values[r * resolution + end] / range : 0.0) == color) {
        ++end;
      }
      out += svg::rect(static_cast<double>(c) * px, y, static_cast<double>(end - c) * px, px, color);
      c = end;
    }
  }
  return out;
}

inline double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

inline std::vector<double> column(const Tensor& t, std::size_t c) {
  std::vector<double> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t.at(r, c);
  return out;
}

inline std::string open_cell(std::size_t row, std::size_t col, std::string_view kind) {
  const double x = kMarginLeft + static_cast<double>(col) * (kCellSize + kCellGap);
  const double y = kMarginTop + static_cast<double>(row) * (kCellSize + kCellGap);
  return "<g class=\"cell\" data-kind=\"" + std::string(kind) + "\" data-row=\"" + std::to_string(row) +
         "\" data-col=\"" + std::to_string(col) + "\" transform=\"translate(" + svg::num(x) + "," + svg::num(y) +
         ")\">\n" + svg::rect(0, 0, kCellSize, kCellSize, svg::kWhite);
}

inline std::string weight_lines(const Tensor& weight, std::size_t node) {
  const std::size_t incoming = weight.cols();
  std::string out;
  for (std::size_t i = 0; i < incoming; ++i) {
    const double w = weight.at(node, i);
    const double y0 = kCellSize * (static_cast<double>(i) + 0.5) / static_cast<double>(incoming);
    const svg::Rgb color = w > 0.0 ? svg::kPositive : (w < 0.0 ? svg::kNegative : svg::kNeutral);
    out += "<line x1=\"0\" y1=\"" + svg::num(y0) + "\" x2=\"" + svg::num(kCellSize) + "\" y2=\"" +
           svg::num(kCellSize / 2) + "\" stroke=\"" + svg::hex(color) + "\" stroke-width=\"" +
           svg::num(stroke_width(w)) + "\"/>\n";
  }
  return out;
}

inline std::string scatter(std::span<const LabeledPoint> points, std::size_t limit) {
  std::string out;
  if (points.empty() || limit == 0) return out;
  const std::size_t stride = std::max<std::size_t>(1, (points.size() + limit - 1) / limit);
  for (std::size_t i = 0; i < points.size(); i += stride) {
    const auto& p = points[i];
    const double x = (p.x.x1 + 1.0) / 2.0 * kCellSize;
    const double y = (1.0 - p.x.x2) / 2.0 * kCellSize;
    out += "<circle cx=\"" + svg::num(x) + "\" cy=\"" + svg::num(y) + "\" r=\"0.8\" fill=\"" +
           (p.label == 0 ? std::string("#1b3a6b") : std::string("#e66101")) + "\"/>\n";
  }
  return out;
}

}  // namespace detail

/// |nodes| rows × (2·|layers|+1) columns of cells: the grid input, then per
/// sampled layer a weight-line column and a node-output column. The last
/// output column carries the training scatter.
inline std::string render_feature_panel(const ResidualMLP& model, const GridProbe& grid,
                                        std::span<const LabeledPoint> train_points, const PanelSpec& spec) {
  spec.validate(model);
  if (grid.axis_resolution * grid.axis_resolution != grid.points.size()) {
    throw ValidationError("grid points do not form a square lattice");
  }
  if (grid.axis_resolution != spec.grid_resolution) {
    throw ValidationError("grid resolution " + std::to_string(grid.axis_resolution) + " differs from panel spec " +
                          std::to_string(spec.grid_resolution));
  }
  const FeatureStack features = extract_features(model, grid);
  const std::size_t rows = spec.nodes.size();
  const std::size_t cols = 2 * spec.layers.size() + 1;
  const double width = detail::kMarginLeft + static_cast<double>(cols) * (detail::kCellSize + detail::kCellGap);
  const double height = detail::kMarginTop + static_cast<double>(rows) * (detail::kCellSize + detail::kCellGap);
  const std::size_t res = grid.axis_resolution;

  std::string doc = svg::header(width, height);
  doc += svg::rect(0, 0, width, height, svg::kWhite, "background");
  auto column_x = [&](std::size_t col) {
    return detail::kMarginLeft + static_cast<double>(col) * (detail::kCellSize + detail::kCellGap) +
           detail::kCellSize / 2;
  };
  doc += svg::text(column_x(0), 16, "input");
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const std::string name = spec.layers[k] == 0 ? "pre" : "L" + std::to_string(spec.layers[k]);
    doc += svg::text(column_x(1 + 2 * k), 16, "W " + name);
    doc += svg::text(column_x(2 + 2 * k), 16, name);
  }

  const Tensor& input = features.grid_input;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t node = spec.nodes[r];
    const double row_y = detail::kMarginTop + static_cast<double>(r) * (detail::kCellSize + detail::kCellGap);
    doc += svg::text(detail::kMarginLeft - 6, row_y + detail::kCellSize / 2 + 3, "node " + std::to_string(node), 9, "end");

    if (r < kInputDim) {
      doc += detail::open_cell(r, 0, "input");
      doc += detail::raster(detail::column(input, r), res, 1.0);
    } else {
      doc += detail::open_cell(r, 0, "empty");
    }
    doc += "</g>\n";

    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
      const std::size_t layer = spec.layers[k];
      const Tensor& weight = layer == 0 ? model.pre().weight : model.block(layer - 1).weight;
      doc += detail::open_cell(r, 1 + 2 * k, "weights");
      doc += detail::weight_lines(weight, node);
      doc += "</g>\n";

      const Tensor& values = features.layers[layer];
      const auto node_values = detail::column(values, node);
      const double range = spec.bounds == ColorBounds::kPerNodeSymmetric ? detail::max_abs(node_values)
                                                                         : detail::max_abs(values.data());
      doc += detail::open_cell(r, 2 + 2 * k, "output");
      doc += detail::raster(node_values, res, range);
      if (k + 1 == spec.layers.size()) doc += detail::scatter(train_points, spec.scatter_limit);
      doc += "</g>\n";
    }
  }
  doc += "</svg>\n";
  return doc;
}

/// (N+1)² cells on a sequential ramp over [min, 1], with axis labels and a legend.
inline std::string render_similarity_heatmap(const SimilarityMatrix& matrix) {
  constexpr double kCell = 14.0, kLeft = 40.0, kTop = 30.0, kLegendGap = 24.0, kLegendWidth = 16.0;
  const std::size_t n = matrix.layers;
  const double grid = kCell * static_cast<double>(n);
  const double width = kLeft + grid + kLegendGap + kLegendWidth + 50.0;
  const double height = kTop + grid + 30.0;
  const double low = matrix.min();
  auto shade = [&](double s) { return svg::sequential(low < 1.0 ? (s - low) / (1.0 - low) : 1.0); };

  std::string doc = svg::header(width, height);
  doc += svg::rect(0, 0, width, height, svg::kWhite, "background");
  doc += svg::text(kLeft + grid / 2, 14, "layer similarity 1/(1+d)", 11);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t m = 0; m < n; ++m) {
      doc += svg::rect(kLeft + kCell * static_cast<double>(m), kTop + kCell * static_cast<double>(l), kCell, kCell,
                       shade(matrix.at(l, m)), "cell");
    }
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = kCell * (static_cast<double>(i) + 0.5);
    doc += svg::text(kLeft - 4, kTop + centre + 3, std::to_string(i), 8, "end");
    doc += svg::text(kLeft + centre, kTop + grid + 12, std::to_string(i), 8);
  }
  constexpr int kLegendSteps = 32;
  const double legend_x = kLeft + grid + kLegendGap;
  const double step = grid / kLegendSteps;
  for (int i = 0; i < kLegendSteps; ++i) {
    const double t = 1.0 - (static_cast<double>(i) + 0.5) / kLegendSteps;
    doc += svg::rect(legend_x, kTop + step * i, kLegendWidth, step, svg::sequential(t), "legend");
  }
  doc += svg::text(legend_x + kLegendWidth + 4, kTop + 8, "1", 9, "start");
  doc += svg::text(legend_x + kLegendWidth + 4, kTop + grid, svg::num(low), 9, "start");
  doc += "</svg>\n";
  return doc;
}

/// One panel per requested epoch, rendered from stored parameters.
inline std::vector<std::pair<std::size_t, std::string>> snapshot_training(
    const std::map<std::size_t, ResidualMLP>& snapshots, std::span<const std::size_t> epochs, const GridProbe& grid,
    std::span<const LabeledPoint> train_points, const PanelSpec& spec) {
  std::vector<std::pair<std::size_t, std::string>> panels;
  for (std::size_t epoch : epochs) {
    const auto it = snapshots.find(epoch);
    if (it == snapshots.end()) throw LookupError("no checkpoint for epoch " + std::to_string(epoch));
    panels.emplace_back(epoch, render_feature_panel(it->second, grid, train_points, spec));
  }
  return panels;
}

}  // namespace rdp
