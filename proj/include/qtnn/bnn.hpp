#pragma once

#include <cstdint>

#include "qtnn/data.hpp"
#include "qtnn/dense.hpp"

namespace qtnn {

/// Single-hidden-layer network whose weights are Gaussian: W = mean + std·ε,
/// ε ~ N(0, 1) per entry. Training moves the means (and biases) by SGD on the
/// cross-entropy of sampled-weight predictions; the stds stay at their
/// initial value. There is no prior or KL term.
struct BnnModel {
  Matrix w1_mean, w1_std;  // features×hidden
  Matrix w2_mean, w2_std;  // hidden×classes
  Matrix b1;               // 1×hidden
  Matrix b2;               // 1×classes
  ActivationKind hidden_act;
  std::size_t n_samples = 50;

  /// Means drawn exactly as FnnModel::init; every std set to `init_std`.
  static BnnModel init(std::size_t features, std::size_t hidden, std::size_t classes,
                       const ActivationKind& act, std::uint64_t seed, double init_std = 0.01,
                       std::size_t n_samples = 50);
  void validate() const;
};

struct SampledWeights {
  Matrix w1, w2;
};

/// Draws ε for w1 (row-major) then w2 from `rng`.
SampledWeights sample_weights(const BnnModel& model, Rng& rng);

struct BnnForward {
  Matrix probs;
  DenseCache cache;
  SampledWeights weights;
};

BnnForward bnn_sample_forward(const BnnModel& model, const Matrix& x, Rng& rng);

/// Mean of model.n_samples sampled softmax outputs, drawn in sequence from `rng`.
Matrix bnn_predict(const BnnModel& model, const Matrix& x, Rng& rng);

struct BnnPrediction {
  Matrix mean;    // averaged class probabilities
  Matrix stddev;  // across-sample standard deviation per class
};

BnnPrediction bnn_predict_with_uncertainty(const BnnModel& model, const Matrix& x, Rng& rng);

/// Accuracy and cross-entropy of bnn_predict on `data`.
EvalResult bnn_evaluate(const BnnModel& model, const LabeledDataset& data, Rng& rng);

struct BnnTrainOptions {
  /// Held-out predictive evaluation cadence in epochs; the last epoch is
  /// always evaluated. 0 disables intermediate evaluation.
  std::size_t eval_every = 1;
};

/// One weight draw per mini-batch (per sample when batch_size = 1). Training
/// metrics are running means over the epoch's sampled-weight steps.
TrainingTrace bnn_train(BnnModel& model, const LabeledDataset& train, const TrainConfig& cfg,
                        const LabeledDataset* held_out = nullptr,
                        const EpochCallback& on_epoch = {}, const BnnTrainOptions& opts = {});

}  // namespace qtnn
