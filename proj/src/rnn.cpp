#include "qtnn/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtnn/errors.hpp"
#include "qtnn/fnn.hpp"

namespace qtnn {

RnnModel RnnModel::init(std::size_t vocab, std::size_t embed_dim, std::size_t hidden,
                        std::size_t classes, const ActivationKind& act, std::uint64_t seed) {
  if (vocab == 0 || hidden == 0 || classes == 0) throw ConfigError("RNN dimensions must be > 0");
  Rng rng = Rng::substream(seed, kInitStream);
  RnnModel m;
  const std::size_t input = embed_dim == 0 ? vocab : embed_dim;
  if (embed_dim > 0) m.embed = gaussian_matrix(vocab, embed_dim, 1.0, rng);
  m.wx = gaussian_matrix(input, hidden, 1.0 / std::sqrt(static_cast<double>(input)), rng);
  m.wh = gaussian_matrix(hidden, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  m.bh = Matrix(1, hidden);
  m.wy = gaussian_matrix(hidden, classes, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  m.by = Matrix(1, classes);
  m.hidden_act = act;
  return m;
}

void RnnModel::validate() const {
  const std::size_t h = wh.rows();
  const bool ok = wh.cols() == h && wx.cols() == h && bh.rows() == 1 && bh.cols() == h &&
                  wy.rows() == h && by.rows() == 1 && by.cols() == wy.cols() &&
                  (one_hot() || embed.cols() == wx.rows());
  if (!ok) throw ShapeError("RNN parameter shapes are inconsistent");
}

namespace {

void check_sequence(const RnnModel& model, std::span<const std::size_t> seq) {
  if (seq.empty()) throw InputError("rnn: empty sequence");
  for (std::size_t tok : seq) {
    if (tok >= model.vocab_size()) {
      throw InputError("rnn: token " + std::to_string(tok) + " outside vocabulary of " +
                       std::to_string(model.vocab_size()));
    }
  }
}

// z += x·w for a single row vector x.
void accumulate_row_product(std::span<double> z, std::span<const double> x, const Matrix& w) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const auto wr = w.row(k);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += xk * wr[j];
  }
}

}  // namespace

RnnForward rnn_forward(const RnnModel& model, std::span<const std::size_t> seq) {
  model.validate();
  check_sequence(model, seq);
  const std::size_t hidden = model.hidden();
  RnnForward f;
  f.states.reserve(seq.size());
  f.dstates.reserve(seq.size());
  std::vector<double> h(hidden, 0.0);
  for (std::size_t tok : seq) {
    std::vector<double> z(hidden, 0.0);
    if (model.one_hot()) {
      const auto wr = model.wx.row(tok);
      for (std::size_t j = 0; j < hidden; ++j) z[j] += wr[j];
    } else {
      accumulate_row_product(z, model.embed.row(tok), model.wx);
    }
    accumulate_row_product(z, h, model.wh);
    const auto b = model.bh.row(0);
    std::vector<double> d(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      z[j] += b[j];
      z[j] = activate_scalar(z[j], model.hidden_act, &d[j]);
    }
    h = z;
    f.states.push_back(std::move(z));
    f.dstates.push_back(std::move(d));
  }
  Matrix logits(1, model.classes());
  accumulate_row_product(logits.row(0), h, model.wy);
  add_row_broadcast(logits, model.by);
  const Matrix p = softmax(logits);
  f.probs.assign(p.values().begin(), p.values().end());
  return f;
}

RnnGrads rnn_backward(const RnnModel& model, std::span<const std::size_t> seq,
                      const RnnForward& fwd, int label) {
  const std::size_t hidden = model.hidden();
  const std::size_t classes = model.classes();
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw InputError("rnn: label out of range");
  }
  RnnGrads g;
  g.embed = Matrix(model.embed.rows(), model.embed.cols());
  g.wx = Matrix(model.wx.rows(), model.wx.cols());
  g.wh = Matrix(hidden, hidden);
  g.bh = Matrix(1, hidden);
  g.wy = Matrix(hidden, classes);
  g.by = Matrix(1, classes);

  std::vector<double> dl(fwd.probs);
  dl[static_cast<std::size_t>(label)] -= 1.0;
  const auto& h_last = fwd.states.back();
  std::vector<double> dh(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    const auto wyr = model.wy.row(j);
    auto gwy = g.wy.row(j);
    for (std::size_t c = 0; c < classes; ++c) {
      gwy[c] += h_last[j] * dl[c];
      dh[j] += wyr[c] * dl[c];
    }
  }
  for (std::size_t c = 0; c < classes; ++c) g.by(0, c) = dl[c];

  std::vector<double> dz(hidden);
  for (std::size_t t = seq.size(); t-- > 0;) {
    const auto& d = fwd.dstates[t];
    for (std::size_t j = 0; j < hidden; ++j) dz[j] = dh[j] * d[j];
    for (std::size_t j = 0; j < hidden; ++j) g.bh(0, j) += dz[j];
    if (t > 0) {
      const auto& hp = fwd.states[t - 1];
      for (std::size_t k = 0; k < hidden; ++k) {
        if (hp[k] == 0.0) continue;
        auto gr = g.wh.row(k);
        for (std::size_t j = 0; j < hidden; ++j) gr[j] += hp[k] * dz[j];
      }
    }
    const std::size_t tok = seq[t];
    if (model.one_hot()) {
      auto gr = g.wx.row(tok);
      for (std::size_t j = 0; j < hidden; ++j) gr[j] += dz[j];
    } else {
      const auto e = model.embed.row(tok);
      auto ge = g.embed.row(tok);
      for (std::size_t k = 0; k < e.size(); ++k) {
        auto gr = g.wx.row(k);
        const auto wr = model.wx.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) {
          gr[j] += e[k] * dz[j];
          acc += wr[j] * dz[j];
        }
        ge[k] += acc;
      }
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      const auto wr = model.wh.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < hidden; ++j) acc += wr[j] * dz[j];
      dh[k] = acc;
    }
  }
  return g;
}

double rnn_loss(const RnnModel& model, std::span<const std::size_t> seq, int label) {
  const auto f = rnn_forward(model, seq);
  return -std::log(f.probs.at(static_cast<std::size_t>(label)));
}

EvalResult rnn_evaluate(const RnnModel& model, const SentimentCorpus& corpus) {
  if (corpus.size() == 0) return {};
  double hits = 0.0, loss = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto f = rnn_forward(model, corpus.phrases[i]);
    const auto label = static_cast<std::size_t>(corpus.labels[i]);
    std::size_t best = 0;
    for (std::size_t c = 1; c < f.probs.size(); ++c)
      if (f.probs[c] > f.probs[best]) best = c;
    if (best == label) hits += 1.0;
    loss -= std::log(f.probs[label]);
  }
  const double n = static_cast<double>(corpus.size());
  return {hits / n, loss / n};
}

TrainingTrace rnn_train(RnnModel& model, const SentimentCorpus& train, const TrainConfig& cfg,
                        const SentimentCorpus* test, const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (train.size() == 0) throw InputError("rnn_train: empty corpus");
  Rng shuffle = Rng::substream(cfg.seed, kShuffleStream);
  TrainingTrace trace;
  trace.has_test = test != nullptr;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffle.permutation(train.size());
    for (std::size_t step = 0; step < order.size(); ++step) {
      const std::size_t i = order[step];
      const auto& seq = train.phrases[i];
      const int label = train.labels[i];
      const auto fwd = rnn_forward(model, seq);
      const double loss = -std::log(fwd.probs[static_cast<std::size_t>(label)]);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", sequence " + std::to_string(step));
      }
      RnnGrads g = rnn_backward(model, seq, fwd, label);
      if (cfg.clip_norm) {
        Matrix* grads[] = {&g.embed, &g.wx, &g.wh, &g.bh, &g.wy, &g.by};
        clip_global_norm(grads, *cfg.clip_norm);
      }
      sgd_update(model.embed, g.embed, cfg.lr);
      sgd_update(model.wx, g.wx, cfg.lr);
      sgd_update(model.wh, g.wh, cfg.lr);
      sgd_update(model.bh, g.bh, cfg.lr);
      sgd_update(model.wy, g.wy, cfg.lr);
      sgd_update(model.by, g.by, cfg.lr);
    }
    EpochMetrics m;
    m.epoch = epoch;
    const auto tr = rnn_evaluate(model, train);
    m.train_loss = tr.loss;
    m.train_accuracy = tr.accuracy;
    if (test) {
      const auto te = rnn_evaluate(model, *test);
      m.test_loss = te.loss;
      m.test_accuracy = te.accuracy;
    }
    trace.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return trace;
}

}  // namespace qtnn
