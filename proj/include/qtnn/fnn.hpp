#pragma once

#include <cstdint>

#include "qtnn/data.hpp"
#include "qtnn/dense.hpp"

namespace qtnn {

/// Single-hidden-layer classifier: softmax(act(x·w1 + b1)·w2 + b2).
struct FnnModel {
  Matrix w1;  // features×hidden
  Matrix b1;  // 1×hidden
  Matrix w2;  // hidden×classes
  Matrix b2;  // 1×classes
  ActivationKind hidden_act;

  /// Weights ~ N(0, 1/fan_in) (std 1/√fan_in), biases zero.
  static FnnModel init(std::size_t features, std::size_t hidden, std::size_t classes,
                       const ActivationKind& act, std::uint64_t seed);
  void validate() const;
};

struct FnnForward {
  Matrix probs;
  DenseCache cache;
};

FnnForward fnn_forward(const FnnModel& model, const Matrix& x);

/// Mini-batch SGD with global-norm clipping. Each epoch reshuffles with a
/// stream derived from cfg.seed. Throws NumericalError on a non-finite loss.
TrainingTrace fnn_train(FnnModel& model, const LabeledDataset& train, const TrainConfig& cfg,
                        const LabeledDataset* held_out = nullptr,
                        const EpochCallback& on_epoch = {});

EvalResult fnn_evaluate(const FnnModel& model, const LabeledDataset& data);

/// SGD step w ← w − lr·g.
void sgd_update(Matrix& w, const Matrix& g, double lr);

/// Substream indices derived from TrainConfig::seed.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kShuffleStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

}  // namespace qtnn
