#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtnn/numerics.hpp"

namespace qtnn {

/// How a pre-activation x is mapped to a particle energy E ≥ 0.
enum class QtMode {
  rectified,  ///< E = ampl·max(x, 0), y = T(E)
  absolute,   ///< E = ampl·|x|, y = T(E)
  bipolar,    ///< E = ampl·max(x, 0), y = 2T(E) − 1
};

/// Rectangular barrier of height v0 and width a crossed by a particle of mass m.
/// Defaults are nondimensional (m = ħ = 1) and put inputs in [0, 1] on the
/// steep sub-barrier flank of T.
struct BarrierParams {
  double v0 = 2.0;
  double a = 1.0;
  double m = 1.0;
  double hbar = 1.0;
  double ampl = 1.0;
  QtMode mode = QtMode::rectified;

  /// Throws ConfigError unless every physical parameter is positive.
  void validate() const;
  friend bool operator==(const BarrierParams&, const BarrierParams&) = default;
};

enum class ActivationTag { qt, relu, sigmoid, tanh, identity };

struct ActivationKind {
  ActivationTag tag = ActivationTag::relu;
  BarrierParams barrier{};  // meaningful only for qt

  static ActivationKind qt(const BarrierParams& p = {});
  static ActivationKind relu() { return {ActivationTag::relu, {}}; }
  static ActivationKind sigmoid() { return {ActivationTag::sigmoid, {}}; }
  static ActivationKind tanh() { return {ActivationTag::tanh, {}}; }
  static ActivationKind identity() { return {ActivationTag::identity, {}}; }

  std::string name() const;
  friend bool operator==(const ActivationKind&, const ActivationKind&) = default;
};

/// Parses "qt", "relu", "sigmoid", "tanh" or "identity"; qt takes `barrier`.
ActivationKind parse_activation(std::string_view name, const BarrierParams& barrier = {});
QtMode parse_qt_mode(std::string_view name);
std::string to_string(QtMode mode);

/// Transmission probability through the barrier at energy e. Uses the
/// sub-barrier (sinh) form for E < V0, the over-barrier (sin) form for E > V0
/// and the E → V0 limit within 1e-12·V0 of the branch point. T(0) = 0.
double qt_transmission(double e, const BarrierParams& p);

/// Analytic dT/dE. Evaluated through the entire function (sin√s/√s)² in
/// s = 2ma²(E − V0)/ħ², so it is smooth across E = V0; at E = 0 it returns
/// the right limit.
double qt_transmission_derivative(double e, const BarrierParams& p);

struct ActivationResult {
  std::vector<double> y;
  std::vector<double> dy_dx;
};

ActivationResult activate(std::span<const double> x, const ActivationKind& kind);

/// Applies `kind` elementwise to z in place, writing the local derivative
/// into `dz` (resized to match).
void activate_inplace(Matrix& z, Matrix& dz, const ActivationKind& kind);

/// Scalar form used by the recurrent models.
double activate_scalar(double x, const ActivationKind& kind, double* dy_dx);

struct SoftmaxResult {
  Matrix probs;
  double loss = 0.0;  // mean cross-entropy over rows
  Matrix dlogits;     // (probs − onehot) / rows
};

Matrix softmax(const Matrix& logits);
SoftmaxResult softmax_crossentropy(const Matrix& logits, const Matrix& onehot);

struct HarmonicPeak {
  int k = 0;
  double freq_hz = 0.0;
  double rel_db = 0.0;
};

struct SpectrumReport {
  std::string kind;
  double f0 = 0.0;
  std::vector<double> frequencies;
  std::vector<double> magnitudes;
  std::vector<HarmonicPeak> detected;
};

/// Detection threshold relative to the largest non-DC peak.
inline constexpr double kHarmonicThresholdDb = -80.0;

/// Drives `kind` with sin(2π f0 t) sampled at fs for n samples and flags every
/// harmonic of f0 whose magnitude exceeds `threshold_db` relative to the
/// largest non-DC bin. Requires an integer number of periods and n a power of two.
SpectrumReport harmonic_spectrum(const ActivationKind& kind, double f0, double fs, std::size_t n,
                                 double threshold_db = kHarmonicThresholdDb);

/// `freq_hz,magnitude` rows.
void write_spectrum_csv(const SpectrumReport& report, const std::string& path);
/// {kind, f0, detected: [{k, freq_hz, rel_db}]}
std::string harmonic_report_json(const SpectrumReport& report);

}  // namespace qtnn
