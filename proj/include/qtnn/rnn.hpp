#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qtnn/data.hpp"
#include "qtnn/dense.hpp"

namespace qtnn {

/// Elman recurrent classifier over token sequences:
///   h_t = act(x_t·wx + h_{t−1}·wh + bh),  probs = softmax(h_T·wy + by),
/// with x_t the learned embedding of token t (or its one-hot vector when
/// `embed` is empty). h_0 = 0.
struct RnnModel {
  Matrix embed;  // vocab×input; empty in one-hot mode
  Matrix wx;     // input×hidden (vocab×hidden in one-hot mode)
  Matrix wh;     // hidden×hidden
  Matrix bh;     // 1×hidden
  Matrix wy;     // hidden×classes
  Matrix by;     // 1×classes
  ActivationKind hidden_act;

  bool one_hot() const noexcept { return embed.empty(); }
  std::size_t vocab_size() const noexcept { return one_hot() ? wx.rows() : embed.rows(); }
  std::size_t hidden() const noexcept { return wh.rows(); }
  std::size_t classes() const noexcept { return wy.cols(); }

  /// embed_dim = 0 selects one-hot inputs. Embeddings ~ N(0, 1), weight
  /// matrices ~ N(0, 1/fan_in), biases zero.
  static RnnModel init(std::size_t vocab, std::size_t embed_dim, std::size_t hidden,
                       std::size_t classes, const ActivationKind& act, std::uint64_t seed);
  void validate() const;
};

struct RnnForward {
  std::vector<double> probs;                 // classes
  std::vector<std::vector<double>> states;   // h_1..h_T
  std::vector<std::vector<double>> dstates;  // act′ at each pre-activation
};

RnnForward rnn_forward(const RnnModel& model, std::span<const std::size_t> seq);

struct RnnGrads {
  Matrix embed, wx, wh, bh, wy, by;
};

/// Full backpropagation through time of −log probs[label] (final-step output).
RnnGrads rnn_backward(const RnnModel& model, std::span<const std::size_t> seq,
                      const RnnForward& fwd, int label);

/// Cross-entropy of one sequence.
double rnn_loss(const RnnModel& model, std::span<const std::size_t> seq, int label);

/// Per-sequence SGD (batch size 1) with global-norm clipping.
TrainingTrace rnn_train(RnnModel& model, const SentimentCorpus& train, const TrainConfig& cfg,
                        const SentimentCorpus* test = nullptr, const EpochCallback& on_epoch = {});

EvalResult rnn_evaluate(const RnnModel& model, const SentimentCorpus& corpus);

}  // namespace qtnn
