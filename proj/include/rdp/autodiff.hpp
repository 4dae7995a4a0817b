#pragma once

// Tape-based reverse-mode differentiation over Tensor values.
//
// Nodes are appended during forward and never mutated afterwards; backward
// walks them in strict reverse creation order, so gradient accumulation order
// is fixed by construction. A tape belongs to one thread.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/tensor.hpp"

namespace rdp {

struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const noexcept { return id != kNone; }
  bool operator==(const Var&) const = default;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kMatMul,
  kAddBroadcast,
  kMulMask,
  kScale,
  kGelu,
  kSoftmaxCrossEntropy,
  kDetach,
  kSum,
};

/// Gradients produced by one backward pass, indexed by node. Nodes that the
/// loss does not depend on (or that sit behind a detach) report zeros.
class GradientMap {
 public:
  GradientMap() = default;
  GradientMap(std::vector<Tensor> grads, std::vector<Shape> shapes, std::vector<bool> reached)
      : grads_(std::move(grads)), shapes_(std::move(shapes)), reached_(std::move(reached)) {}

  Tensor at(Var v) const {
    if (v.id >= grads_.size()) throw LookupError("gradient requested for unknown node");
    return reached_[v.id] ? grads_[v.id] : Tensor(shapes_[v.id]);
  }

  /// True when some gradient flowed into the node.
  bool has(Var v) const noexcept { return v.id < reached_.size() && reached_[v.id]; }

 private:
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
  std::vector<bool> reached_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Differentiable input (a parameter, or any tensor under test).
  Var leaf(Tensor value) { return push({.kind = OpKind::kLeaf, .value = std::move(value), .needs_grad = true}); }

  /// Input that never receives gradient (data, labels, masks).
  Var constant(Tensor value) { return push({.kind = OpKind::kConstant, .value = std::move(value)}); }

  Var matmul(Var a, Var b, bool transpose_b = false) {
    Node n{.kind = OpKind::kMatMul, .value = kernels::matmul(value(a), value(b), transpose_b)};
    n.transpose_b = transpose_b;
    return push_binary(std::move(n), a, b);
  }

  Var add_broadcast(Var a, Var b) {
    return push_binary({.kind = OpKind::kAddBroadcast, .value = kernels::add_broadcast(value(a), value(b))}, a, b);
  }

  /// Row-scales x by a constant binary B×1 mask.
  Var mul_mask(Var x, const Tensor& mask) {
    Node n{.kind = OpKind::kMulMask, .value = kernels::mul_mask(value(x), mask)};
    n.aux = mask;
    return push_unary(std::move(n), x);
  }

  Var scale(Var x, double factor) {
    Node n{.kind = OpKind::kScale, .value = kernels::scale(value(x), factor)};
    n.factor = factor;
    return push_unary(std::move(n), x);
  }

  Var gelu(Var x) { return push_unary({.kind = OpKind::kGelu, .value = kernels::gelu(value(x))}, x); }

  Var sum(Var x) {
    double acc = 0.0;
    for (double v : value(x).data()) acc += v;
    return push_unary({.kind = OpKind::kSum, .value = Tensor::scalar(acc)}, x);
  }

  /// Value-transparent stop-gradient.
  Var detach(Var x) {
    Node n{.kind = OpKind::kDetach, .value = value(x)};
    n.inputs[0] = x.id;
    n.detached = true;
    return push(std::move(n));
  }

  /// Mean over the batch of −log softmax(logits)[label].
  Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    const Tensor& z = value(logits);
    kernels::require_matrix(z, "logits");
    const std::size_t batch = z.rows(), classes = z.cols();
    if (batch == 0) throw ValidationError("softmax_cross_entropy needs a nonempty batch");
    if (labels.size() != batch) {
      throw DimensionError("label count " + std::to_string(labels.size()) + " does not match logits " +
                           shape_string(z.shape()));
    }
    Tensor probs({batch, classes});
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const int label = labels[i];
      if (label < 0 || static_cast<std::size_t>(label) >= classes) {
        throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
      }
      double peak = z.at(i, 0);
      for (std::size_t c = 1; c < classes; ++c) peak = std::max(peak, z.at(i, c));
      double denom = 0.0;
      for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z.at(i, c) - peak);
      const double log_denom = std::log(denom);
      for (std::size_t c = 0; c < classes; ++c) probs.at(i, c) = std::exp(z.at(i, c) - peak - log_denom);
      total += log_denom - (z.at(i, static_cast<std::size_t>(label)) - peak);
    }
    Node n{.kind = OpKind::kSoftmaxCrossEntropy, .value = Tensor::scalar(total / static_cast<double>(batch))};
    n.aux = std::move(probs);
    n.labels.assign(labels.begin(), labels.end());
    return push_unary(std::move(n), logits);
  }

  const Tensor& value(Var v) const {
    check(v);
    return nodes_[v.id].value;
  }

  OpKind kind(Var v) const {
    check(v);
    return nodes_[v.id].kind;
  }

  bool is_detached(Var v) const {
    check(v);
    return nodes_[v.id].detached;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  void reset() noexcept { nodes_.clear(); }

  /// Reverse pass from a scalar loss.
  GradientMap backward(Var loss) const {
    check(loss);
    if (nodes_[loss.id].value.size() != 1) {
      throw ValidationError("backward needs a scalar loss, got shape " + shape_string(nodes_[loss.id].value.shape()));
    }
    std::vector<Tensor> grads(nodes_.size());
    std::vector<Shape> shapes(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) shapes[i] = nodes_[i].value.shape();
    grads[loss.id] = Tensor(nodes_[loss.id].value.shape(), 1.0);
    std::vector<bool> reached(nodes_.size(), false);
    reached[loss.id] = true;

    auto accumulate = [&](std::size_t id, Tensor&& contribution) {
      if (!nodes_[id].needs_grad) return;
      if (!reached[id]) {
        grads[id] = std::move(contribution);
        reached[id] = true;
        return;
      }
      auto dst = grads[id].data();
      auto src = contribution.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };

    for (std::size_t id = loss.id + 1; id-- > 0;) {
      if (!reached[id]) continue;
      const Node& node = nodes_[id];
      if (node.detached || !node.needs_grad) continue;
      const Tensor& g = grads[id];
      switch (node.kind) {
        case OpKind::kLeaf:
        case OpKind::kConstant:
        case OpKind::kDetach:
          break;
        case OpKind::kMatMul: {
          const Tensor& a = nodes_[node.inputs[0]].value;
          const Tensor& b = nodes_[node.inputs[1]].value;
          if (nodes_[node.inputs[0]].needs_grad) {
            // C = A·B → dA = dC·Bᵀ;  C = A·Bᵀ → dA = dC·B
            accumulate(node.inputs[0], kernels::matmul(g, b, !node.transpose_b));
          }
          if (nodes_[node.inputs[1]].needs_grad) {
            // C = A·B → dB = Aᵀ·dC;  C = A·Bᵀ → dB = dCᵀ·A
            accumulate(node.inputs[1], node.transpose_b ? matmul_tn(g, a) : matmul_tn(a, g));
          }
          break;
        }
        case OpKind::kAddBroadcast: {
          accumulate(node.inputs[0], Tensor(g));
          const Tensor& b = nodes_[node.inputs[1]].value;
          if (b.shape() == g.shape()) {
            accumulate(node.inputs[1], Tensor(g));
          } else {
            Tensor db(b.shape());
            const std::size_t n = g.cols();
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
            accumulate(node.inputs[1], std::move(db));
          }
          break;
        }
        case OpKind::kMulMask:
          accumulate(node.inputs[0], kernels::mul_mask(g, node.aux));
          break;
        case OpKind::kScale:
          accumulate(node.inputs[0], kernels::scale(g, node.factor));
          break;
        case OpKind::kGelu: {
          Tensor dx = g;
          const Tensor& x = nodes_[node.inputs[0]].value;
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= kernels::gelu_derivative(x[i]);
          accumulate(node.inputs[0], std::move(dx));
          break;
        }
        case OpKind::kSum:
          accumulate(node.inputs[0], Tensor(nodes_[node.inputs[0]].value.shape(), g.item()));
          break;
        case OpKind::kSoftmaxCrossEntropy: {
          Tensor dz = node.aux;
          const std::size_t batch = dz.rows();
          const double upstream = g.item() / static_cast<double>(batch);
          for (std::size_t i = 0; i < batch; ++i) {
            dz.at(i, static_cast<std::size_t>(node.labels[i])) -= 1.0;
            for (std::size_t c = 0; c < dz.cols(); ++c) dz.at(i, c) *= upstream;
          }
          accumulate(node.inputs[0], std::move(dz));
          break;
        }
      }
    }
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      if (!nodes_[id].needs_grad) reached[id] = false;
    }
    return GradientMap(std::move(grads), std::move(shapes), std::move(reached));
  }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::array<std::size_t, 2> inputs{Var::kNone, Var::kNone};
    Tensor value;
    Tensor aux;
    std::vector<int> labels;
    double factor = 1.0;
    bool transpose_b = false;
    bool needs_grad = false;
    bool detached = false;
  };

  /// aᵀ·b for a[k×m], b[k×n].
  static Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double aip = a[p * m + i];
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * b[p * n + j];
      }
    return out;
  }

  void check(Var v) const {
    if (v.id >= nodes_.size()) throw LookupError("variable is not on this tape");
  }

  Var push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
  }

  Var push_unary(Node node, Var x) {
    check(x);
    node.inputs[0] = x.id;
    node.needs_grad = nodes_[x.id].needs_grad;
    return push(std::move(node));
  }

  Var push_binary(Node node, Var a, Var b) {
    check(a);
    check(b);
    node.inputs = {a.id, b.id};
    node.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    return push(std::move(node));
  }

  std::vector<Node> nodes_;
};

/// Central differences (f(x+h·eᵢ) − f(x−h·eᵢ)) / 2h for every element of x.
inline Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-6) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double up = f(probe);
    probe[i] = original - h;
    const double down = f(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// max |a−b| / max(1, |a|, |b|) over all elements.
inline double max_relative_error(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("cannot compare " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace rdp
