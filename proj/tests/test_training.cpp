#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "rdp/adam.hpp"
#include "rdp/training.hpp"
#include "test_support.hpp"

using namespace rdp;

namespace {

std::vector<LabeledPoint> small_spiral(std::size_t n = 512, std::uint64_t seed = 1) {
  return generate_spiral({.n_samples = n, .seed = seed});
}

TrainConfig small_config(Algorithm algorithm, double drop = 0.1) {
  TrainConfig c;
  c.algorithm = algorithm;
  c.depth = 3;
  c.hidden = 4;
  c.epochs = 3;
  c.batch_size = 64;
  c.drop_rate = drop;
  c.seed = 5;
  return c;
}

bool is_block(std::size_t index, std::size_t count) { return index >= 2 && index + 2 < count; }

double abs_sum(const Tensor& t) {
  double s = 0;
  for (double v : t.data()) s += std::abs(v);
  return s;
}

}  // namespace

TEST(Masks, KeepRateWithinThreeSigma) {
  Xoshiro256 rng(derive_seed(0, stream::kMask));
  const DropMask mask = sample_mask(100000, 0.1, rng);
  double kept = 0;
  for (double v : mask.values.data()) {
    ASSERT_TRUE(v == 0.0 || v == 1.0);
    kept += v;
  }
  EXPECT_NEAR(kept / 100000.0, 0.9, 0.00285);
  EXPECT_THROW(sample_mask(4, 1.0, rng), ValidationError);
  EXPECT_THROW(sample_mask(4, -0.1, rng), ValidationError);
  const DropMask none = sample_mask(1000, 0.0, rng);
  EXPECT_EQ(none.values, Tensor({1000, 1}, 1.0));
}

TEST(Masks, FitCyclesStoredRows) {
  std::vector<DropMask> stored{{Tensor::matrix(3, 1, {1, 0, 1}), 0}};
  const auto same = fit_masks(stored, 3);
  EXPECT_EQ(same[0], stored[0]);
  EXPECT_EQ(fit_masks(stored, 2)[0].values, Tensor::matrix(2, 1, {1, 0}));
  EXPECT_EQ(fit_masks(stored, 7)[0].values, Tensor::matrix(7, 1, {1, 0, 1, 1, 0, 1, 1}));
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  Tensor p = Tensor::matrix(1, 3, {0, 0, 0});
  const std::vector<Tensor> g{Tensor::matrix(1, 3, {1, -4, 0})};
  const std::vector<Tensor*> params{&p};
  const std::vector<std::string> names{"w"};
  AdamState state;
  adam_step(params, g, names, state, {});
  // m̂ = g and v̂ = g², so the step is lr·g/(|g| + eps).
  EXPECT_EQ(p[0], -0.1 / (1.0 + 1e-8));
  EXPECT_NEAR(p[0], -0.09999999900000001, 3e-17);
  EXPECT_EQ(p[1], 0.1 * 4 / (4 + 1e-8));
  EXPECT_EQ(p[2], 0.0);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientIsFixedPointFromRest) {
  Tensor p = Tensor::matrix(1, 2, {0.3, -0.7});
  const Tensor before = p;
  const std::vector<Tensor> g{Tensor({1, 2})};
  const std::vector<Tensor*> params{&p};
  AdamState state;
  for (int i = 0; i < 5; ++i) adam_step(params, g, {}, state, {});
  EXPECT_EQ(p, before);
}

TEST(Adam, StepsStayNearLearningRateAndSecondMomentNonNegative) {
  Xoshiro256 rng(3);
  Tensor p({4, 4});
  const std::vector<Tensor*> params{&p};
  AdamState state;
  for (int i = 0; i < 200; ++i) {
    const Tensor before = p;
    const std::vector<Tensor> g{rdp::testing::random_tensor({4, 4}, rng, -3, 3)};
    adam_step(params, g, {}, state, {.lr = 0.01});
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_LE(std::abs(p[j] - before[j]), 0.01 * 10);
    for (double v : state.v[0].data()) EXPECT_GE(v, 0.0);
  }
}

TEST(Adam, NonFiniteGradientNamesParameterAndTouchesNothing) {
  Tensor a = Tensor::matrix(1, 1, {1}), b = Tensor::matrix(1, 1, {2});
  const std::vector<Tensor*> params{&a, &b};
  const std::vector<std::string> names{"pre.weight", "block.2.bias"};
  const std::vector<Tensor> g{Tensor::matrix(1, 1, {1}), Tensor::matrix(1, 1, {std::nan("")})};
  AdamState state;
  try {
    adam_step(params, g, names, state, {});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("block.2.bias"), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 2.0);
  EXPECT_EQ(state.t, 0u);
}

TEST(Stages, CounterAdvancesOnlyForResidualDroppath) {
  const auto data = small_spiral();
  const Batch batch = make_batch(std::span(data).first(32));
  for (Algorithm algorithm : {Algorithm::kStandard, Algorithm::kDroppath, Algorithm::kResidualDroppath}) {
    TrainConfig config = small_config(algorithm);
    ResidualMLP model = ResidualMLP::init(3, 4, 1);
    TrainerState state(1);
    AdamState adam;
    for (int i = 0; i < 5; ++i) train_iteration(model, batch, config, state, adam);
    EXPECT_EQ(state.stage, algorithm == Algorithm::kResidualDroppath ? 5 : 0);
  }
}

TEST(Stages, OddStageWithoutMasksIsAnError) {
  const auto data = small_spiral();
  const Batch batch = make_batch(std::span(data).first(8));
  const TrainConfig config = small_config(Algorithm::kResidualDroppath);
  TrainerState state(0);
  state.stage = 1;
  EXPECT_THROW(compute_step(ResidualMLP::init(3, 4, 0), batch, config, state), StateError);
}

TEST(Stages, OddStageReusesStoredMasksAndMatchesStandardLoss) {
  const auto data = small_spiral();
  const Batch even = make_batch(std::span(data).subspan(0, 40));
  const Batch odd = make_batch(std::span(data).subspan(100, 40));
  const TrainConfig config = small_config(Algorithm::kResidualDroppath, 0.5);
  const ResidualMLP model = ResidualMLP::init(3, 4, 2);
  TrainerState state(2);
  compute_step(model, even, config, state);
  ASSERT_TRUE(state.stored_masks.has_value());
  const auto stored = *state.stored_masks;
  const Xoshiro256 rng_before = state.mask_rng;
  state.stage = 1;
  const StepResult step = compute_step(model, odd, config, state);
  EXPECT_EQ(*state.stored_masks, stored);
  EXPECT_EQ(state.mask_rng, rng_before);
  EXPECT_EQ(step.stage, 1);
  TrainerState plain(2);
  const StepResult standard = compute_step(model, odd, small_config(Algorithm::kStandard), plain);
  EXPECT_EQ(step.loss, standard.loss);
}

TEST(Stages, ZeroDropRateFreezesEveryBlockInOddStages) {
  const auto data = small_spiral();
  const TrainConfig config = small_config(Algorithm::kResidualDroppath, 0.0);
  ResidualMLP model = ResidualMLP::init(3, 4, 3);
  TrainerState state(3);
  AdamState adam;
  BatchIterator batches(data, 64, 9);
  Batch batch;
  TrainerState plain(3);
  while (batches.next(batch)) {
    const TrainerState snapshot = state;
    StepResult step = compute_step(model, batch, config, state);
    const StepResult standard = compute_step(model, batch, small_config(Algorithm::kStandard), plain);
    for (std::size_t i = 0; i < step.grads.size(); ++i) {
      if (snapshot.odd() && is_block(i, step.grads.size())) {
        EXPECT_EQ(abs_sum(step.grads[i]), 0.0) << i;
      } else if (snapshot.odd()) {
        EXPECT_GT(abs_sum(step.grads[i]), 0.0) << i;
      } else {
        EXPECT_EQ(step.grads[i], standard.grads[i]) << i;
      }
    }
    state = snapshot;
    train_iteration(model, batch, config, state, adam);
  }
}

TEST(Stages, PerSampleRoutingAtBatchOne) {
  const auto data = small_spiral();
  const Batch single = make_batch(std::span(data).subspan(17, 1));
  const ResidualMLP model = ResidualMLP::init(3, 4, 4);
  const TrainConfig config = small_config(Algorithm::kResidualDroppath);
  TrainerState plain(0);
  const StepResult standard = compute_step(model, single, small_config(Algorithm::kStandard), plain);
  for (double keep : {0.0, 1.0}) {
    TrainerState state(0);
    state.stage = 1;
    state.stored_masks = uniform_masks(3, 1, keep);
    const StepResult step = compute_step(model, single, config, state);
    for (std::size_t i = 0; i < step.grads.size(); ++i) {
      if (!is_block(i, step.grads.size())) continue;
      for (std::size_t j = 0; j < step.grads[i].size(); ++j) {
        if (keep == 1.0) {
          EXPECT_EQ(step.grads[i][j], 0.0);
        } else {
          EXPECT_NEAR(step.grads[i][j], standard.grads[i][j], 1e-12);
        }
      }
    }
  }
}

TEST(Training, IterationArithmetic) {
  TrainConfig config;
  EXPECT_EQ(iterations_per_epoch(config, 16384) * config.epochs, 64000u);
  EXPECT_EQ(iterations_per_epoch(config, 1000), 4u);
  config.algorithm = Algorithm::kResidualDroppath;
  EXPECT_EQ(iterations_per_epoch(config, 16384), 64u);
  config.mask_reuse = MaskReuse::kPairedBatch;
  EXPECT_EQ(iterations_per_epoch(config, 16384), 128u);

  const auto data = small_spiral(1000);
  TrainConfig small = small_config(Algorithm::kResidualDroppath);
  small.batch_size = 256;
  const TrainResult result = train(small, data);
  ASSERT_EQ(result.iterations.size(), 12u);
  std::size_t even = 0;
  for (std::size_t i = 0; i < result.iterations.size(); ++i) {
    EXPECT_EQ(result.iterations[i].iter, i + 1);
    EXPECT_EQ(result.iterations[i].epoch, i / 4 + 1);
    EXPECT_EQ(result.iterations[i].stage, static_cast<std::int64_t>(i));
    even += result.iterations[i].stage % 2 == 0;
    EXPECT_EQ(result.iterations[i].train_acc.has_value(), i % 4 == 3);
  }
  EXPECT_EQ(even, 6u);
}

TEST(Training, PairedBatchRepeatsEachBatchForAStagePair) {
  const auto data = small_spiral(256);
  TrainConfig config = small_config(Algorithm::kResidualDroppath);
  config.mask_reuse = MaskReuse::kPairedBatch;
  config.epochs = 2;
  const TrainResult result = train(config, data);
  ASSERT_EQ(result.iterations.size(), 16u);
  EXPECT_EQ(result.iterations.back().stage, 15);
}

TEST(Training, ZeroEpochsReturnsInitialization) {
  const auto data = small_spiral();
  TrainConfig config = small_config(Algorithm::kStandard);
  config.epochs = 0;
  const TrainResult result = train(config, data, {.snapshot_epochs = {0}});
  EXPECT_TRUE(result.iterations.empty());
  EXPECT_EQ(result.model, ResidualMLP::init(3, 4, config.seed));
  EXPECT_EQ(result.snapshots.at(0), result.model);
  EXPECT_EQ(result.final_train_acc, evaluate(result.model, data));
}

TEST(Training, DeterministicAcrossRuns) {
  const auto data = small_spiral();
  for (Algorithm algorithm : {Algorithm::kStandard, Algorithm::kDroppath, Algorithm::kResidualDroppath}) {
    const TrainResult a = train(small_config(algorithm), data);
    const TrainResult b = train(small_config(algorithm), data);
    EXPECT_EQ(a.model, b.model);
    std::ostringstream ca, cb;
    write_metrics_csv(ca, a.iterations);
    write_metrics_csv(cb, b.iterations);
    EXPECT_EQ(ca.str(), cb.str());
  }
}

TEST(Training, DroppathWithoutDropsIsStandard) {
  const auto data = small_spiral();
  const TrainResult a = train(small_config(Algorithm::kStandard), data);
  const TrainResult b = train(small_config(Algorithm::kDroppath, 0.0), data);
  EXPECT_EQ(a.model, b.model);
  std::ostringstream ca, cb;
  write_metrics_csv(ca, a.iterations);
  write_metrics_csv(cb, b.iterations);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(Training, HugeLearningRateDiverges) {
  const auto data = small_spiral();
  TrainConfig config = small_config(Algorithm::kStandard);
  config.lr = 1e300;
  const TrainResult result = train(config, data);
  EXPECT_TRUE(result.diverged);
  EXPECT_FALSE(result.failure.empty());
  EXPECT_FALSE(result.iterations.empty());
}

TEST(Evaluate, HandBuiltSignClassifier) {
  std::vector<LabeledPoint> points{{{-0.5, 0}, 0}, {{0.5, 0}, 1}, {{-0.2, 0.1}, 0}, {{0.3, -0.1}, 1}};
  EXPECT_EQ(evaluate(ResidualMLP(1, 2), points), 0.5);  // all ties → class 0
  ResidualMLP model(1, 2);
  model.pre().weight = Tensor::matrix(2, 2, {1, 0, 0, 0});
  model.post().weight = Tensor::matrix(2, 2, {-1, 0, 1, 0});
  EXPECT_EQ(evaluate(model, points), 1.0);
  points[3].label = 0;
  EXPECT_EQ(evaluate(model, points), 0.75);
  EXPECT_THROW(evaluate(model, std::vector<LabeledPoint>{}), ValidationError);
}

TEST(Config, ParsingAndValidation) {
  EXPECT_EQ(parse_algorithm("residual_droppath"), Algorithm::kResidualDroppath);
  EXPECT_EQ(to_string(Algorithm::kDroppath), "droppath");
  EXPECT_THROW(parse_algorithm("dropout"), ValidationError);
  EXPECT_EQ(parse_mask_reuse("paired_batch"), MaskReuse::kPairedBatch);
  EXPECT_THROW(parse_mask_reuse("x"), ValidationError);
  TrainConfig config;
  config.drop_rate = 1.0;
  EXPECT_THROW(config.validate(), ValidationError);
  config = {};
  config.lr = 0;
  EXPECT_THROW(config.validate(), ValidationError);
}
