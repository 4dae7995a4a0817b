#pragma once

// Standard, Droppath and ResidualDroppath training of a ResidualMLP.
//
// ResidualDroppath alternates two iteration kinds on a stage counter M:
//   even M: fresh per-block masks, branches of dropped rows are zeroed
//           (no rescaling of kept rows); masks are stored;
//   odd M:  the stored masks freeze the branches that were kept, and
//           gradient reaches block n only through rows its mask dropped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdp/adam.hpp"
#include "rdp/autodiff.hpp"
#include "rdp/dataset.hpp"
#include "rdp/errors.hpp"
#include "rdp/model.hpp"
#include "rdp/rng.hpp"

namespace rdp {

enum class Algorithm { kStandard, kDroppath, kResidualDroppath };

/// How an odd stage obtains its batch.
///   kLiteral:     the next batch from the data stream, masked by position.
///   kPairedBatch: the same batch the preceding even stage used.
enum class MaskReuse { kLiteral, kPairedBatch };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kStandard: return "standard";
    case Algorithm::kDroppath: return "droppath";
    case Algorithm::kResidualDroppath: return "residual_droppath";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "standard") return Algorithm::kStandard;
  if (name == "droppath") return Algorithm::kDroppath;
  if (name == "residual_droppath") return Algorithm::kResidualDroppath;
  throw ValidationError("unknown algorithm '" + std::string(name) +
                        "' (expected standard, droppath or residual_droppath)");
}

inline std::string_view to_string(MaskReuse m) { return m == MaskReuse::kLiteral ? "literal" : "paired_batch"; }

inline MaskReuse parse_mask_reuse(std::string_view name) {
  if (name == "literal") return MaskReuse::kLiteral;
  if (name == "paired_batch") return MaskReuse::kPairedBatch;
  throw ValidationError("unknown mask reuse mode '" + std::string(name) + "' (expected literal or paired_batch)");
}

/// Defaults are the toy-run hyperparameters: depth 6, hidden 6, Adam with
/// lr 0.1 and betas (0.9, 0.999), 1000 epochs of batch 256, drop rate 0.1.
struct TrainConfig {
  Algorithm algorithm = Algorithm::kStandard;
  std::size_t depth = 6;
  std::size_t hidden = 6;
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 1000;
  std::size_t batch_size = 256;
  double drop_rate = 0.1;
  std::uint64_t seed = 0;
  MaskReuse mask_reuse = MaskReuse::kLiteral;

  void validate() const {
    if (depth < 1 || hidden < 1) throw ValidationError("depth and hidden must be at least 1");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
    if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ValidationError("betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ValidationError("drop rate must lie in [0, 1)");
  }

  AdamHyper adam() const { return {lr, beta1, beta2, eps}; }
};

/// B independent keep (1, probability 1−p) / drop (0, probability p) draws.
inline DropMask sample_mask(std::size_t batch, double drop_rate, Xoshiro256& rng, std::size_t block_index = 0) {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ValidationError("drop rate must lie in [0, 1)");
  DropMask mask = DropMask::filled(batch, 0.0, block_index);
  const double keep = 1.0 - drop_rate;
  for (double& v : mask.values.data()) v = rng.uniform() < keep ? 1.0 : 0.0;
  return mask;
}

/// Adapts stored masks to a batch of a different size: row i takes stored
/// row i mod the stored length. Shorter batches therefore see a truncation.
inline std::vector<DropMask> fit_masks(std::span<const DropMask> stored, std::size_t batch) {
  std::vector<DropMask> out;
  out.reserve(stored.size());
  for (const DropMask& m : stored) {
    if (m.batch() == batch) {
      out.push_back(m);
      continue;
    }
    if (m.batch() == 0) throw StateError("stored mask is empty");
    DropMask fitted = DropMask::filled(batch, 0.0, m.block_index);
    for (std::size_t i = 0; i < batch; ++i) fitted.values[i] = m.values[i % m.batch()];
    out.push_back(std::move(fitted));
  }
  return out;
}

struct TrainerState {
  explicit TrainerState(std::uint64_t seed) : mask_rng(derive_seed(seed, stream::kMask)) {}

  std::int64_t stage = 0;  // M
  std::optional<std::vector<DropMask>> stored_masks;
  Xoshiro256 mask_rng;

  bool odd() const noexcept { return stage % 2 != 0; }
};

struct StepResult {
  double loss = 0.0;
  std::int64_t stage = -1;  // M for residual_droppath, −1 otherwise
  std::vector<Tensor> grads;  // ResidualMLP::named_parameters() order
};

/// Forward and backward for one iteration without touching parameters or M.
/// Samples (and for even stages stores) masks as the algorithm requires.
inline StepResult compute_step(const ResidualMLP& model, const Batch& batch, const TrainConfig& config,
                               TrainerState& state) {
  if (config.depth != model.depth() || config.hidden != model.hidden()) {
    throw ValidationError("config dimensions do not match the model");
  }
  Tape tape;
  const ParamVars params = bind_parameters(tape, model);
  const Var x = tape.constant(batch.x);
  const std::size_t rows = batch.size();
  auto fresh_masks = [&] {
    std::vector<DropMask> masks;
    masks.reserve(model.depth());
    for (std::size_t n = 0; n < model.depth(); ++n) masks.push_back(sample_mask(rows, config.drop_rate, state.mask_rng, n));
    return masks;
  };

  StepResult result;
  Var logits;
  switch (config.algorithm) {
    case Algorithm::kStandard:
      logits = forward_standard(tape, params, x);
      break;
    case Algorithm::kDroppath: {
      const auto masks = fresh_masks();
      logits = forward_droppath(tape, params, x, masks, /*scale_keep=*/true, 1.0 - config.drop_rate);
      break;
    }
    case Algorithm::kResidualDroppath:
      result.stage = state.stage;
      if (!state.odd()) {
        state.stored_masks = fresh_masks();
        logits = forward_droppath(tape, params, x, *state.stored_masks, /*scale_keep=*/false, 1.0);
      } else {
        if (!state.stored_masks) throw StateError("odd stage reached without masks from an even stage");
        const auto masks = fit_masks(*state.stored_masks, rows);
        logits = forward_stage2(tape, params, x, masks);
      }
      break;
  }
  const Var loss = tape.softmax_cross_entropy(logits, batch.y);
  result.loss = tape.value(loss).item();
  const GradientMap grads = tape.backward(loss);
  for (Var v : params.ordered()) result.grads.push_back(grads.at(v));
  return result;
}

/// One full iteration: gradients, Adam update, then M ← M + 1 for
/// residual_droppath. Returns the pre-update batch loss.
inline double train_iteration(ResidualMLP& model, const Batch& batch, const TrainConfig& config,
                              TrainerState& state, AdamState& adam) {
  StepResult step = compute_step(model, batch, config, state);
  auto named = model.named_parameters();
  std::vector<Tensor*> params;
  std::vector<std::string> names;
  params.reserve(named.size());
  names.reserve(named.size());
  for (auto& [name, tensor] : named) {
    names.push_back(name);
    params.push_back(tensor);
  }
  adam_step(params, step.grads, names, adam, config.adam());
  if (config.algorithm == Algorithm::kResidualDroppath) state.stage += 1;
  return step.loss;
}

/// Fraction of rows whose argmax logit equals the label; ties go to class 0.
inline double evaluate(const ResidualMLP& model, std::span<const LabeledPoint> data) {
  if (data.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  constexpr std::size_t kChunk = 4096;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    const auto chunk = data.subspan(begin, std::min(kChunk, data.size() - begin));
    const Batch batch = make_batch(chunk);
    const Tensor logits = predict(model, batch.x);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const int predicted = logits.at(i, 1) > logits.at(i, 0) ? 1 : 0;
      if (predicted == chunk[i].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct IterationRecord {
  std::size_t iter = 0;   // 1-based
  std::size_t epoch = 0;  // 1-based
  std::int64_t stage = -1;
  double loss = 0.0;
  std::optional<double> train_acc;  // set on the last iteration of an epoch
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_acc = 0.0;
  std::optional<double> eval_acc;
};

struct TrainOptions {
  std::span<const LabeledPoint> eval;  // optional held-out split
  std::vector<std::size_t> snapshot_epochs;
};

struct TrainResult {
  ResidualMLP model;
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::map<std::size_t, ResidualMLP> snapshots;  // epoch → parameters after that epoch
  bool diverged = false;
  std::string failure;
  double final_train_acc = 0.0;
};

/// Iterations per epoch: ⌈n/B⌉, doubled under paired_batch reuse where
/// every batch drives an even and an odd stage.
inline std::size_t iterations_per_epoch(const TrainConfig& config, std::size_t n) {
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const bool paired = config.algorithm == Algorithm::kResidualDroppath && config.mask_reuse == MaskReuse::kPairedBatch;
  return paired ? 2 * batches : batches;
}

inline std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::size_t epoch) {
  return derive_seed(derive_seed(seed, stream::kShuffle), epoch);
}

/// Runs config.epochs epochs. A non-finite loss or gradient stops training
/// with diverged = true; records up to that point are kept.
inline TrainResult train(const TrainConfig& config, std::span<const LabeledPoint> data,
                         const TrainOptions& options = {}) {
  config.validate();
  if (data.empty()) throw ValidationError("training data is empty");
  TrainResult result;
  result.model = ResidualMLP::init(config.depth, config.hidden, config.seed);
  auto wants_snapshot = [&](std::size_t epoch) {
    return std::find(options.snapshot_epochs.begin(), options.snapshot_epochs.end(), epoch) !=
           options.snapshot_epochs.end();
  };
  if (wants_snapshot(0)) result.snapshots.emplace(0, result.model);

  TrainerState state(config.seed);
  AdamState adam;
  const bool paired =
      config.algorithm == Algorithm::kResidualDroppath && config.mask_reuse == MaskReuse::kPairedBatch;
  std::size_t iter = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    BatchIterator batches(data, config.batch_size, epoch_shuffle_seed(config.seed, epoch));
    Batch batch;
    while (batches.next(batch)) {
      const std::size_t repeats = paired ? 2 : 1;
      for (std::size_t r = 0; r < repeats; ++r) {
        IterationRecord record{.iter = ++iter, .epoch = epoch, .stage = -1};
        if (config.algorithm == Algorithm::kResidualDroppath) record.stage = state.stage;
        try {
          record.loss = train_iteration(result.model, batch, config, state, adam);
        } catch (const NumericError& e) {
          record.loss = std::nan("");
          result.iterations.push_back(record);
          result.diverged = true;
          result.failure = e.what();
          return result;
        }
        result.iterations.push_back(record);
        if (!std::isfinite(record.loss)) {
          result.diverged = true;
          result.failure = "non-finite loss at iteration " + std::to_string(iter);
          return result;
        }
      }
    }
    EpochRecord summary{.epoch = epoch, .train_acc = evaluate(result.model, data)};
    if (!options.eval.empty()) summary.eval_acc = evaluate(result.model, options.eval);
    result.iterations.back().train_acc = summary.train_acc;
    result.epochs.push_back(summary);
    if (wants_snapshot(epoch)) result.snapshots.emplace(epoch, result.model);
  }
  result.final_train_acc = result.epochs.empty() ? evaluate(result.model, data) : result.epochs.back().train_acc;
  return result;
}

inline void write_metrics_csv(std::ostream& out, std::span<const IterationRecord> records) {
  out << "iter,epoch,stage,loss,train_acc\n";
  for (const auto& r : records) {
    out << r.iter << ',' << r.epoch << ',' << r.stage << ',' << format_double(r.loss) << ',';
    if (r.train_acc) out << format_double(*r.train_acc);
    out << '\n';
  }
}

inline void write_epochs_csv(std::ostream& out, std::span<const EpochRecord> records) {
  out << "epoch,train_acc,eval_acc\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << format_double(r.train_acc) << ',';
    if (r.eval_acc) out << format_double(*r.eval_acc);
    out << '\n';
  }
}

}  // namespace rdp
