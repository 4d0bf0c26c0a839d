#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "qtnn/activation.hpp"
#include "qtnn/numerics.hpp"

namespace qtnn {

/// Hyperparameters shared by the gradient-trained models.
struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  std::optional<double> clip_norm = 5.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrainingTrace {
  std::vector<EpochMetrics> epochs;
  bool has_test = false;

  nlohmann::json to_json() const;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Intermediate values of one input→hidden→softmax pass.
struct DenseCache {
  Matrix x;       // batch×features
  Matrix h;       // activated hidden layer
  Matrix dh;      // activation derivative at the hidden pre-activation
  Matrix logits;  // batch×classes
};

struct DenseGrads {
  Matrix w1, b1, w2, b2;
};

DenseCache dense_forward(const Matrix& x, const Matrix& w1, const Matrix& b1, const Matrix& w2,
                         const Matrix& b2, const ActivationKind& act);

/// Backpropagates dL/dlogits through the cached pass.
DenseGrads dense_backward(const DenseCache& cache, const Matrix& w2, const Matrix& dlogits);

double global_norm(std::span<const Matrix* const> grads);
/// Rescales all gradients by clip/‖g‖ when the global norm exceeds clip.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Matrix* const> grads, double clip);

/// Fraction of rows whose argmax (ties → lowest index) matches the one-hot label.
double accuracy(const Matrix& probs, const Matrix& onehot);

/// N(0, std²) entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

}  // namespace qtnn
