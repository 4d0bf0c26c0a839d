#include "qtnn/dense.hpp"

#include <cmath>

#include "qtnn/errors.hpp"

namespace qtnn {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
}

nlohmann::json TrainingTrace::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"train_accuracy", e.train_accuracy}};
    if (has_test) {
      j["test_loss"] = e.test_loss;
      j["test_accuracy"] = e.test_accuracy;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

DenseCache dense_forward(const Matrix& x, const Matrix& w1, const Matrix& b1, const Matrix& w2,
                         const Matrix& b2, const ActivationKind& act) {
  if (x.cols() != w1.rows()) {
    throw ShapeError("input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(w1.rows()));
  }
  DenseCache c;
  c.x = x;
  c.h = matmul(x, w1);
  add_row_broadcast(c.h, b1);
  activate_inplace(c.h, c.dh, act);
  c.logits = matmul(c.h, w2);
  add_row_broadcast(c.logits, b2);
  return c;
}

DenseGrads dense_backward(const DenseCache& cache, const Matrix& w2, const Matrix& dlogits) {
  DenseGrads g;
  g.w2 = matmul(transpose(cache.h), dlogits);
  g.b2 = column_sums(dlogits);
  Matrix delta = matmul(dlogits, transpose(w2));
  auto dv = delta.values();
  auto sv = cache.dh.values();
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= sv[i];
  g.w1 = matmul(transpose(cache.x), delta);
  g.b1 = column_sums(delta);
  return g;
}

double global_norm(std::span<const Matrix* const> grads) {
  double s = 0.0;
  for (const Matrix* g : grads)
    for (double v : g->values()) s += v * v;
  return std::sqrt(s);
}

double clip_global_norm(std::span<Matrix* const> grads, double clip) {
  double s = 0.0;
  for (const Matrix* g : grads)
    for (double v : g->values()) s += v * v;
  const double norm = std::sqrt(s);
  if (norm > clip) {
    const double scale = clip / norm;
    for (Matrix* g : grads)
      for (double& v : g->values()) v *= scale;
  }
  return norm;
}

double accuracy(const Matrix& probs, const Matrix& onehot) {
  if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols()) {
    throw ShapeError("accuracy: prediction and label shapes differ");
  }
  if (probs.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    const auto y = onehot.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
      if (p[j] > p[best]) best = j;
    if (y[best] == 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = stddev * rng.normal();
  return m;
}

}  // namespace qtnn
