#pragma once

// Residual MLP: pre-block affine 2→H, N residual blocks h ← h + GELU(W h + b),
// and an affine H→2 classifier head producing raw logits.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdp/autodiff.hpp"
#include "rdp/dataset.hpp"
#include "rdp/errors.hpp"
#include "rdp/rng.hpp"
#include "rdp/tensor.hpp"

namespace rdp {

inline constexpr std::size_t kInputDim = 2;
inline constexpr std::size_t kClassCount = 2;

/// weight is out×in, bias has length out; y = x·Wᵀ + b.
struct Affine {
  Tensor weight;
  Tensor bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
  bool operator==(const Affine&) const = default;
};

class ResidualMLP {
 public:
  ResidualMLP() = default;

  /// Zero-initialized model.
  ResidualMLP(std::size_t depth, std::size_t hidden) {
    if (depth < 1 || hidden < 1) throw ValidationError("depth and hidden must be at least 1");
    pre_ = zero_affine(kInputDim, hidden);
    blocks_.assign(depth, zero_affine(hidden, hidden));
    post_ = zero_affine(hidden, kClassCount);
  }

  /// He-normal weights, N(0, 2/fan_in); zero biases.
  static ResidualMLP init(std::size_t depth, std::size_t hidden, std::uint64_t seed) {
    ResidualMLP model(depth, hidden);
    Xoshiro256 rng(derive_seed(seed, stream::kInit));
    for (Tensor* w : model.weights()) {
      const double stddev = std::sqrt(2.0 / static_cast<double>(w->cols()));
      for (double& v : w->data()) v = stddev * rng.normal();
    }
    return model;
  }

  std::size_t depth() const noexcept { return blocks_.size(); }
  std::size_t hidden() const noexcept { return pre_.out_dim(); }

  std::size_t parameter_count() const noexcept {
    const std::size_t h = hidden();
    return h * kInputDim + h + depth() * (h * h + h) + kClassCount * h + kClassCount;
  }

  Affine& pre() noexcept { return pre_; }
  const Affine& pre() const noexcept { return pre_; }
  Affine& block(std::size_t n) { return blocks_.at(n); }
  const Affine& block(std::size_t n) const { return blocks_.at(n); }
  Affine& post() noexcept { return post_; }
  const Affine& post() const noexcept { return post_; }

  /// Checkpoint order: pre, block.1 … block.N, post; weight before bias.
  std::vector<std::pair<std::string, Tensor*>> named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.reserve(2 * depth() + 4);
    out.emplace_back("pre.weight", &pre_.weight);
    out.emplace_back("pre.bias", &pre_.bias);
    for (std::size_t n = 0; n < depth(); ++n) {
      out.emplace_back("block." + std::to_string(n + 1) + ".weight", &blocks_[n].weight);
      out.emplace_back("block." + std::to_string(n + 1) + ".bias", &blocks_[n].bias);
    }
    out.emplace_back("post.weight", &post_.weight);
    out.emplace_back("post.bias", &post_.bias);
    return out;
  }

  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const {
    auto mutable_view = const_cast<ResidualMLP*>(this)->named_parameters();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mutable_view.size());
    for (auto& [name, t] : mutable_view) out.emplace_back(std::move(name), t);
    return out;
  }

  bool operator==(const ResidualMLP&) const = default;

 private:
  static Affine zero_affine(std::size_t in, std::size_t out) { return {Tensor({out, in}), Tensor({out})}; }

  std::vector<Tensor*> weights() {
    std::vector<Tensor*> out{&pre_.weight};
    for (auto& b : blocks_) out.push_back(&b.weight);
    out.push_back(&post_.weight);
    return out;
  }

  Affine pre_;
  std::vector<Affine> blocks_;
  Affine post_;
};

/// Per-sample keep (1) / drop (0) mask for one block, shape B×1.
struct DropMask {
  Tensor values;
  std::size_t block_index = 0;

  std::size_t batch() const noexcept { return values.rows(); }
  bool operator==(const DropMask&) const = default;

  static DropMask filled(std::size_t batch, double value, std::size_t block_index) {
    return {Tensor({batch, 1}, value), block_index};
  }
};

/// One mask per block, all set to `value`.
inline std::vector<DropMask> uniform_masks(std::size_t depth, std::size_t batch, double value) {
  std::vector<DropMask> out;
  out.reserve(depth);
  for (std::size_t n = 0; n < depth; ++n) out.push_back(DropMask::filled(batch, value, n));
  return out;
}

/// A model's parameters placed on a tape as leaves.
struct ParamVars {
  struct AffineVars {
    Var weight;
    Var bias;
  };
  AffineVars pre;
  std::vector<AffineVars> blocks;
  AffineVars post;

  /// Same order as ResidualMLP::named_parameters().
  std::vector<Var> ordered() const {
    std::vector<Var> out{pre.weight, pre.bias};
    for (const auto& b : blocks) {
      out.push_back(b.weight);
      out.push_back(b.bias);
    }
    out.push_back(post.weight);
    out.push_back(post.bias);
    return out;
  }
};

inline ParamVars bind_parameters(Tape& tape, const ResidualMLP& model) {
  auto bind = [&](const Affine& a) { return ParamVars::AffineVars{tape.leaf(a.weight), tape.leaf(a.bias)}; };
  ParamVars vars;
  vars.pre = bind(model.pre());
  vars.blocks.reserve(model.depth());
  for (std::size_t n = 0; n < model.depth(); ++n) vars.blocks.push_back(bind(model.block(n)));
  vars.post = bind(model.post());
  return vars;
}

namespace detail {

inline Var affine(Tape& tape, Var x, const ParamVars::AffineVars& p) {
  return tape.add_broadcast(tape.matmul(x, p.weight, /*transpose_b=*/true), p.bias);
}

inline void check_input(const Tensor& x) {
  if (x.rank() != 2 || x.cols() != kInputDim) {
    throw DimensionError("model input must be Bx2, got " + shape_string(x.shape()));
  }
}

inline void check_masks(std::span<const DropMask> masks, std::size_t depth, std::size_t batch) {
  if (masks.size() != depth) {
    throw ValidationError("expected " + std::to_string(depth) + " masks, got " + std::to_string(masks.size()));
  }
  for (std::size_t n = 0; n < depth; ++n) {
    if (masks[n].values.rank() != 2 || masks[n].values.cols() != 1 || masks[n].batch() != batch) {
      throw ValidationError("mask for block " + std::to_string(n + 1) + " has shape " +
                            shape_string(masks[n].values.shape()) + ", batch is " + std::to_string(batch));
    }
  }
}

}  // namespace detail

/// h₀ = pre(X); hₙ = hₙ₋₁ + GELU(blockₙ(hₙ₋₁)); logits = post(h_N).
inline Var forward_standard(Tape& tape, const ParamVars& params, Var x) {
  detail::check_input(tape.value(x));
  Var h = detail::affine(tape, x, params.pre);
  for (const auto& block : params.blocks) {
    Var branch = tape.gelu(detail::affine(tape, h, block));
    h = tape.add_broadcast(h, branch);
  }
  return detail::affine(tape, h, params.post);
}

/// hₙ = hₙ₋₁ + s·maskₙ⊙Fₙ with s = 1/keep_prob when scale_keep, else 1.
inline Var forward_droppath(Tape& tape, const ParamVars& params, Var x, std::span<const DropMask> masks,
                            bool scale_keep, double keep_prob) {
  const Tensor& input = tape.value(x);
  detail::check_input(input);
  detail::check_masks(masks, params.blocks.size(), input.rows());
  if (scale_keep && !(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ValidationError("keep probability must lie in (0, 1]");
  }
  Var h = detail::affine(tape, x, params.pre);
  for (std::size_t n = 0; n < params.blocks.size(); ++n) {
    Var branch = tape.mul_mask(tape.gelu(detail::affine(tape, h, params.blocks[n])), masks[n].values);
    if (scale_keep) branch = tape.scale(branch, 1.0 / keep_prob);
    h = tape.add_broadcast(h, branch);
  }
  return detail::affine(tape, h, params.post);
}

/// hₙ = hₙ₋₁ + detach(Fₙ)⊙maskₙ + Fₙ⊙(1−maskₙ). Same values as
/// forward_standard; kept rows of each block are frozen.
inline Var forward_stage2(Tape& tape, const ParamVars& params, Var x, std::span<const DropMask> masks) {
  const Tensor& input = tape.value(x);
  detail::check_input(input);
  detail::check_masks(masks, params.blocks.size(), input.rows());
  Var h = detail::affine(tape, x, params.pre);
  for (std::size_t n = 0; n < params.blocks.size(); ++n) {
    Var branch = tape.gelu(detail::affine(tape, h, params.blocks[n]));
    Var frozen = tape.mul_mask(tape.detach(branch), masks[n].values);
    Var trainable = tape.mul_mask(branch, kernels::complement(masks[n].values));
    h = tape.add_broadcast(tape.add_broadcast(h, frozen), trainable);
  }
  return detail::affine(tape, h, params.post);
}

namespace detail {

inline Tensor affine_value(const Tensor& x, const Affine& a) {
  return kernels::add_broadcast(kernels::matmul(x, a.weight, /*transpose_b=*/true), a.bias);
}

}  // namespace detail

/// Per-layer activations on the grid: layers[0] = pre-block output,
/// layers[n] = output after block n.
struct FeatureStack {
  std::vector<Tensor> layers;
  Tensor grid_input;

  std::size_t depth() const noexcept { return layers.empty() ? 0 : layers.size() - 1; }
  std::size_t points() const noexcept { return grid_input.rows(); }
  std::size_t hidden() const noexcept { return layers.empty() ? 0 : layers.front().cols(); }
  bool operator==(const FeatureStack&) const = default;
};

/// Tape-free standard forward over X recording every layer.
inline FeatureStack extract_features(const ResidualMLP& model, const Tensor& x) {
  detail::check_input(x);
  FeatureStack stack;
  stack.grid_input = x;
  stack.layers.reserve(model.depth() + 1);
  stack.layers.push_back(detail::affine_value(x, model.pre()));
  for (std::size_t n = 0; n < model.depth(); ++n) {
    const Tensor& h = stack.layers.back();
    stack.layers.push_back(kernels::add_broadcast(h, kernels::gelu(detail::affine_value(h, model.block(n)))));
  }
  return stack;
}

inline FeatureStack extract_features(const ResidualMLP& model, const GridProbe& grid) {
  return extract_features(model, grid.as_tensor());
}

/// Tape-free logits; bit-identical to forward_standard.
inline Tensor predict(const ResidualMLP& model, const Tensor& x) {
  detail::check_input(x);
  Tensor h = detail::affine_value(x, model.pre());
  for (std::size_t n = 0; n < model.depth(); ++n) {
    h = kernels::add_broadcast(h, kernels::gelu(detail::affine_value(h, model.block(n))));
  }
  return detail::affine_value(h, model.post());
}

}  // namespace rdp
