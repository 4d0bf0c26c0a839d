#include "qtnn/fnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtnn/errors.hpp"

namespace qtnn {

FnnModel FnnModel::init(std::size_t features, std::size_t hidden, std::size_t classes,
                        const ActivationKind& act, std::uint64_t seed) {
  if (features == 0 || hidden == 0 || classes == 0) throw ConfigError("FNN dimensions must be > 0");
  Rng rng = Rng::substream(seed, kInitStream);
  FnnModel m;
  m.w1 = gaussian_matrix(features, hidden, 1.0 / std::sqrt(static_cast<double>(features)), rng);
  m.b1 = Matrix(1, hidden);
  m.w2 = gaussian_matrix(hidden, classes, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  m.b2 = Matrix(1, classes);
  m.hidden_act = act;
  return m;
}

void FnnModel::validate() const {
  if (b1.rows() != 1 || b1.cols() != w1.cols() || w2.rows() != w1.cols() || b2.rows() != 1 ||
      b2.cols() != w2.cols()) {
    throw ShapeError("FNN parameter shapes are inconsistent");
  }
}

FnnForward fnn_forward(const FnnModel& model, const Matrix& x) {
  model.validate();
  FnnForward f;
  f.cache = dense_forward(x, model.w1, model.b1, model.w2, model.b2, model.hidden_act);
  f.probs = softmax(f.cache.logits);
  return f;
}

void sgd_update(Matrix& w, const Matrix& g, double lr) {
  if (lr == 0.0) return;
  auto wv = w.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= lr * gv[i];
}

EvalResult fnn_evaluate(const FnnModel& model, const LabeledDataset& data) {
  if (data.inputs.cols() != model.w1.rows() || data.num_classes() != model.w2.cols()) {
    throw ShapeError("fnn_evaluate: dataset shape does not match model");
  }
  constexpr std::size_t kChunk = 1000;
  double loss_sum = 0.0, hits = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - begin);
    const LabeledDataset part = data.slice(begin, count);
    const auto cache = dense_forward(part.inputs, model.w1, model.b1, model.w2, model.b2,
                                     model.hidden_act);
    const auto sm = softmax_crossentropy(cache.logits, part.labels_onehot);
    loss_sum += sm.loss * static_cast<double>(count);
    hits += accuracy(sm.probs, part.labels_onehot) * static_cast<double>(count);
  }
  const double n = static_cast<double>(std::max<std::size_t>(data.size(), 1));
  return {hits / n, loss_sum / n};
}

TrainingTrace fnn_train(FnnModel& model, const LabeledDataset& train, const TrainConfig& cfg,
                        const LabeledDataset* held_out, const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (train.inputs.cols() != model.w1.rows() || train.num_classes() != model.w2.cols()) {
    throw ShapeError("fnn_train: dataset shape does not match model");
  }
  Rng shuffle = Rng::substream(cfg.seed, kShuffleStream);
  TrainingTrace trace;
  trace.has_test = held_out != nullptr;
  const std::size_t n = train.size();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffle.permutation(n);
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min(cfg.batch_size, n - begin);
      const std::span<const std::size_t> idx(order.data() + begin, count);
      const Matrix xb = gather_rows(train.inputs, idx);
      const Matrix yb = gather_rows(train.labels_onehot, idx);
      const auto cache = dense_forward(xb, model.w1, model.b1, model.w2, model.b2,
                                       model.hidden_act);
      const auto sm = softmax_crossentropy(cache.logits, yb);
      if (!std::isfinite(sm.loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      DenseGrads g = dense_backward(cache, model.w2, sm.dlogits);
      if (cfg.clip_norm) {
        Matrix* grads[] = {&g.w1, &g.b1, &g.w2, &g.b2};
        clip_global_norm(grads, *cfg.clip_norm);
      }
      sgd_update(model.w1, g.w1, cfg.lr);
      sgd_update(model.b1, g.b1, cfg.lr);
      sgd_update(model.w2, g.w2, cfg.lr);
      sgd_update(model.b2, g.b2, cfg.lr);
    }
    EpochMetrics m;
    m.epoch = epoch;
    const auto tr = fnn_evaluate(model, train);
    m.train_loss = tr.loss;
    m.train_accuracy = tr.accuracy;
    if (held_out) {
      const auto te = fnn_evaluate(model, *held_out);
      m.test_loss = te.loss;
      m.test_accuracy = te.accuracy;
    }
    trace.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return trace;
}

}  // namespace qtnn
