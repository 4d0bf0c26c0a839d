#include "qtnn/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtnn/errors.hpp"
#include "qtnn/fnn.hpp"

namespace qtnn {

BnnModel BnnModel::init(std::size_t features, std::size_t hidden, std::size_t classes,
                        const ActivationKind& act, std::uint64_t seed, double init_std,
                        std::size_t n_samples) {
  if (!(init_std >= 0.0)) throw ConfigError("BNN std must be >= 0");
  if (n_samples < 1) throw ConfigError("BNN needs at least one posterior sample");
  FnnModel base = FnnModel::init(features, hidden, classes, act, seed);
  BnnModel m;
  m.w1_mean = std::move(base.w1);
  m.w2_mean = std::move(base.w2);
  m.b1 = std::move(base.b1);
  m.b2 = std::move(base.b2);
  m.w1_std = Matrix(features, hidden, init_std);
  m.w2_std = Matrix(hidden, classes, init_std);
  m.hidden_act = act;
  m.n_samples = n_samples;
  return m;
}

void BnnModel::validate() const {
  const bool shapes = w1_std.rows() == w1_mean.rows() && w1_std.cols() == w1_mean.cols() &&
                      w2_std.rows() == w2_mean.rows() && w2_std.cols() == w2_mean.cols() &&
                      w2_mean.rows() == w1_mean.cols() && b1.rows() == 1 &&
                      b1.cols() == w1_mean.cols() && b2.rows() == 1 &&
                      b2.cols() == w2_mean.cols();
  if (!shapes) throw ShapeError("BNN parameter shapes are inconsistent");
  for (const Matrix* s : {&w1_std, &w2_std})
    for (double v : s->values())
      if (!(v >= 0.0)) throw ConfigError("BNN std entries must be >= 0");
  if (n_samples < 1) throw ConfigError("BNN needs at least one posterior sample");
}

namespace {

Matrix sample_matrix(const Matrix& mean, const Matrix& stddev, Rng& rng) {
  Matrix w(mean.rows(), mean.cols());
  auto wv = w.values();
  auto mv = mean.values();
  auto sv = stddev.values();
  rng.fill_normal(wv);
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = mv[i] + sv[i] * wv[i];
  return w;
}

}  // namespace

SampledWeights sample_weights(const BnnModel& model, Rng& rng) {
  SampledWeights s;
  s.w1 = sample_matrix(model.w1_mean, model.w1_std, rng);
  s.w2 = sample_matrix(model.w2_mean, model.w2_std, rng);
  return s;
}

BnnForward bnn_sample_forward(const BnnModel& model, const Matrix& x, Rng& rng) {
  model.validate();
  BnnForward f;
  f.weights = sample_weights(model, rng);
  f.cache = dense_forward(x, f.weights.w1, model.b1, f.weights.w2, model.b2, model.hidden_act);
  f.probs = softmax(f.cache.logits);
  return f;
}

BnnPrediction bnn_predict_with_uncertainty(const BnnModel& model, const Matrix& x, Rng& rng) {
  model.validate();
  const std::size_t n = model.n_samples;
  Matrix sum(x.rows(), model.w2_mean.cols());
  Matrix sum_sq(x.rows(), model.w2_mean.cols());
  for (std::size_t s = 0; s < n; ++s) {
    const auto f = bnn_sample_forward(model, x, rng);
    auto pv = f.probs.values();
    auto sv = sum.values();
    auto qv = sum_sq.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      sv[i] += pv[i];
      qv[i] += pv[i] * pv[i];
    }
  }
  BnnPrediction out;
  out.mean = (1.0 / static_cast<double>(n)) * sum;
  out.stddev = Matrix(sum.rows(), sum.cols());
  auto mv = out.mean.values();
  auto qv = sum_sq.values();
  auto dv = out.stddev.values();
  for (std::size_t i = 0; i < dv.size(); ++i) {
    const double var = qv[i] / static_cast<double>(n) - mv[i] * mv[i];
    dv[i] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return out;
}

Matrix bnn_predict(const BnnModel& model, const Matrix& x, Rng& rng) {
  return bnn_predict_with_uncertainty(model, x, rng).mean;
}

EvalResult bnn_evaluate(const BnnModel& model, const LabeledDataset& data, Rng& rng) {
  const Matrix probs = bnn_predict(model, data.inputs, rng);
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      if (data.labels_onehot(i, c) != 0.0) loss -= std::log(std::max(probs(i, c), 1e-300));
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(probs.rows(), 1));
  return {accuracy(probs, data.labels_onehot), loss / n};
}

TrainingTrace bnn_train(BnnModel& model, const LabeledDataset& train, const TrainConfig& cfg,
                        const LabeledDataset* held_out, const EpochCallback& on_epoch,
                        const BnnTrainOptions& opts) {
  cfg.validate();
  model.validate();
  if (train.inputs.cols() != model.w1_mean.rows() || train.num_classes() != model.w2_mean.cols()) {
    throw ShapeError("bnn_train: dataset shape does not match model");
  }
  Rng shuffle = Rng::substream(cfg.seed, kShuffleStream);
  Rng noise = Rng::substream(cfg.seed, kNoiseStream);
  Rng eval_rng = Rng::substream(cfg.seed, kNoiseStream + 1);
  const std::size_t n = train.size();
  const std::size_t features = model.w1_mean.rows();
  const std::size_t hidden = model.w1_mean.cols();

  TrainingTrace trace;
  trace.has_test = held_out != nullptr;
  std::vector<std::size_t> active;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffle.permutation(n);
    double loss_sum = 0.0, hit_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min(cfg.batch_size, n - begin);
      const std::span<const std::size_t> idx(order.data() + begin, count);
      const Matrix xb = gather_rows(train.inputs, idx);
      const Matrix yb = gather_rows(train.labels_onehot, idx);

      // Rows of w1 that meet a zero input column affect neither the output
      // nor the gradient, so only the active rows are sampled.
      active.clear();
      for (std::size_t k = 0; k < features; ++k) {
        for (std::size_t i = 0; i < count; ++i) {
          if (xb(i, k) != 0.0) {
            active.push_back(k);
            break;
          }
        }
      }
      Matrix xc(count, active.size());
      Matrix w1c(active.size(), hidden);
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t a = 0; a < active.size(); ++a) xc(i, a) = xb(i, active[a]);
      noise.fill_normal(w1c.values());
      for (std::size_t a = 0; a < active.size(); ++a) {
        const auto mr = model.w1_mean.row(active[a]);
        const auto sr = model.w1_std.row(active[a]);
        auto wr = w1c.row(a);
        for (std::size_t j = 0; j < hidden; ++j) wr[j] = mr[j] + sr[j] * wr[j];
      }
      const Matrix w2s = sample_matrix(model.w2_mean, model.w2_std, noise);

      const auto cache = dense_forward(xc, w1c, model.b1, w2s, model.b2, model.hidden_act);
      const auto sm = softmax_crossentropy(cache.logits, yb);
      if (!std::isfinite(sm.loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      loss_sum += sm.loss * static_cast<double>(count);
      hit_sum += accuracy(sm.probs, yb) * static_cast<double>(count);

      // ∂W/∂mean = 1, so the sampled-weight gradients drive the means.
      DenseGrads g = dense_backward(cache, w2s, sm.dlogits);
      if (cfg.clip_norm) {
        Matrix* grads[] = {&g.w1, &g.b1, &g.w2, &g.b2};
        clip_global_norm(grads, *cfg.clip_norm);
      }
      if (cfg.lr != 0.0) {
        for (std::size_t a = 0; a < active.size(); ++a) {
          auto mr = model.w1_mean.row(active[a]);
          const auto gr = g.w1.row(a);
          for (std::size_t j = 0; j < hidden; ++j) mr[j] -= cfg.lr * gr[j];
        }
      }
      sgd_update(model.b1, g.b1, cfg.lr);
      sgd_update(model.w2_mean, g.w2, cfg.lr);
      sgd_update(model.b2, g.b2, cfg.lr);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_accuracy = hit_sum / static_cast<double>(n);
    const bool evaluate = held_out && (epoch == cfg.epochs ||
                                       (opts.eval_every > 0 && epoch % opts.eval_every == 0));
    if (evaluate) {
      const auto te = bnn_evaluate(model, *held_out, eval_rng);
      m.test_loss = te.loss;
      m.test_accuracy = te.accuracy;
    } else if (held_out) {
      m.test_loss = std::nan("");
      m.test_accuracy = std::nan("");
    }
    trace.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return trace;
}

}  // namespace qtnn
