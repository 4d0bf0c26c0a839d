#include "qtnn/activation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "qtnn/errors.hpp"
#include "qtnn/report.hpp"

namespace qtnn {

void BarrierParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("barrier parameter ") + name + " must be positive, got " +
                        std::to_string(v));
    }
  };
  positive(v0, "v0");
  positive(a, "a");
  positive(m, "m");
  positive(hbar, "hbar");
  positive(ampl, "ampl");
}

ActivationKind ActivationKind::qt(const BarrierParams& p) {
  p.validate();
  return {ActivationTag::qt, p};
}

std::string ActivationKind::name() const {
  switch (tag) {
    case ActivationTag::qt: return "qt";
    case ActivationTag::relu: return "relu";
    case ActivationTag::sigmoid: return "sigmoid";
    case ActivationTag::tanh: return "tanh";
    case ActivationTag::identity: return "identity";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name, const BarrierParams& barrier) {
  if (name == "qt") return ActivationKind::qt(barrier);
  if (name == "relu") return ActivationKind::relu();
  if (name == "sigmoid") return ActivationKind::sigmoid();
  if (name == "tanh") return ActivationKind::tanh();
  if (name == "identity") return ActivationKind::identity();
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

QtMode parse_qt_mode(std::string_view name) {
  if (name == "rectified") return QtMode::rectified;
  if (name == "absolute") return QtMode::absolute;
  if (name == "bipolar") return QtMode::bipolar;
  throw ConfigError("unknown qt mode '" + std::string(name) + "'");
}

std::string to_string(QtMode mode) {
  switch (mode) {
    case QtMode::rectified: return "rectified";
    case QtMode::absolute: return "absolute";
    case QtMode::bipolar: return "bipolar";
  }
  return "unknown";
}

namespace {

constexpr double kBranchWindow = 1e-12;

void require_energy(double e) {
  if (!(e >= 0.0)) throw DomainError("transmission energy must be >= 0, got " + std::to_string(e));
}

// u(s) = sin(√s)/√s continued to s < 0 as sinh(√−s)/√−s, with u'(s).
void sinc_root(double s, double& u, double& du) {
  if (std::abs(s) < 1.0) {
    // Σ (−s)^k/(2k+1)!; 18 terms are far below double precision for |s| < 1.
    double term = 1.0;  // (−s)^k/(2k+1)!
    double dterm = 0.0;
    u = 1.0;
    du = 0.0;
    double pow_prev = 1.0;  // (−s)^(k−1)/(2k+1)! accumulator for du
    for (int k = 1; k <= 18; ++k) {
      const double denom = static_cast<double>((2 * k) * (2 * k + 1));
      pow_prev = term / denom;     // (−s)^(k−1)/(2k+1)!
      term = -s * pow_prev;        // (−s)^k/(2k+1)!
      dterm = -static_cast<double>(k) * pow_prev;
      u += term;
      du += dterm;
    }
    return;
  }
  if (s > 0.0) {
    const double r = std::sqrt(s);
    u = std::sin(r) / r;
    du = (r * std::cos(r) - std::sin(r)) / (2.0 * r * r * r);
  } else {
    const double r = std::sqrt(-s);
    u = std::sinh(r) / r;
    du = -(r * std::cosh(r) - std::sinh(r)) / (2.0 * r * r * r);
  }
}

}  // namespace

double qt_transmission(double e, const BarrierParams& p) {
  require_energy(e);
  if (e == 0.0) return 0.0;
  const double alpha = e - p.v0;
  if (std::abs(alpha) <= kBranchWindow * p.v0) {
    return 1.0 / (1.0 + p.m * p.a * p.a * p.v0 / (2.0 * p.hbar * p.hbar));
  }
  const double beta = p.v0 * p.v0 / (4.0 * e * alpha);
  if (alpha < 0.0) {
    const double kappa1 = std::sqrt(-2.0 * p.m * alpha) / p.hbar;
    const double sh = std::sinh(kappa1 * p.a);
    return 1.0 / (1.0 - beta * sh * sh);
  }
  const double kappa = std::sqrt(2.0 * p.m * alpha) / p.hbar;
  const double sn = std::sin(kappa * p.a);
  return 1.0 / (1.0 + beta * sn * sn);
}

double qt_transmission_derivative(double e, const BarrierParams& p) {
  require_energy(e);
  // T = E / (E + K g(s)), s = c(E − V0), c = 2ma²/ħ², K = V0² c / 4, g = u².
  const double c = 2.0 * p.m * p.a * p.a / (p.hbar * p.hbar);
  const double k = p.v0 * p.v0 * c / 4.0;
  double u = 0.0, du = 0.0;
  sinc_root(c * (e - p.v0), u, du);
  const double g = u * u;
  const double dg = 2.0 * u * du;
  const double denom = e + k * g;
  if (!std::isfinite(denom) || !std::isfinite(dg) || denom > 1e150) return 0.0;
  return k * (g - e * c * dg) / (denom * denom);
}

double activate_scalar(double x, const ActivationKind& kind, double* dy_dx) {
  if (!std::isfinite(x)) throw DomainError("activation input is not finite");
  double y = 0.0, d = 0.0;
  switch (kind.tag) {
    case ActivationTag::identity:
      y = x;
      d = 1.0;
      break;
    case ActivationTag::relu:
      y = x > 0.0 ? x : 0.0;
      d = x > 0.0 ? 1.0 : 0.0;
      break;
    case ActivationTag::sigmoid:
      if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
      } else {
        const double ex = std::exp(x);
        y = ex / (1.0 + ex);
      }
      d = y * (1.0 - y);
      break;
    case ActivationTag::tanh:
      y = std::tanh(x);
      d = 1.0 - y * y;
      break;
    case ActivationTag::qt: {
      const BarrierParams& p = kind.barrier;
      switch (p.mode) {
        case QtMode::rectified:
        case QtMode::bipolar: {
          const double scale = p.mode == QtMode::bipolar ? 2.0 : 1.0;
          if (x > 0.0) {
            const double energy = p.ampl * x;
            y = scale * qt_transmission(energy, p);
            d = scale * p.ampl * qt_transmission_derivative(energy, p);
          }
          if (p.mode == QtMode::bipolar) y -= 1.0;
          break;
        }
        case QtMode::absolute: {
          const double energy = p.ampl * std::abs(x);
          y = qt_transmission(energy, p);
          if (x != 0.0) d = (x > 0.0 ? 1.0 : -1.0) * p.ampl * qt_transmission_derivative(energy, p);
          break;
        }
      }
      break;
    }
  }
  if (dy_dx) *dy_dx = d;
  return y;
}

ActivationResult activate(std::span<const double> x, const ActivationKind& kind) {
  ActivationResult r;
  r.y.resize(x.size());
  r.dy_dx.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.y[i] = activate_scalar(x[i], kind, &r.dy_dx[i]);
  return r;
}

void activate_inplace(Matrix& z, Matrix& dz, const ActivationKind& kind) {
  if (dz.rows() != z.rows() || dz.cols() != z.cols()) dz = Matrix(z.rows(), z.cols());
  auto zv = z.values();
  auto dv = dz.values();
  for (std::size_t i = 0; i < zv.size(); ++i) zv[i] = activate_scalar(zv[i], kind, &dv[i]);
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    auto out = p.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      out[j] = std::exp(z[j] - zmax);
      sum += out[j];
    }
    for (double& v : out) v /= sum;
  }
  return p;
}

SoftmaxResult softmax_crossentropy(const Matrix& logits, const Matrix& onehot) {
  if (logits.rows() != onehot.rows() || logits.cols() != onehot.cols()) {
    throw ShapeError("softmax_crossentropy: logits " + std::to_string(logits.rows()) + "x" +
                     std::to_string(logits.cols()) + " vs labels " +
                     std::to_string(onehot.rows()) + "x" + std::to_string(onehot.cols()));
  }
  SoftmaxResult r;
  r.probs = Matrix(logits.rows(), logits.cols());
  r.dlogits = Matrix(logits.rows(), logits.cols());
  const std::size_t batch = logits.rows();
  const double inv_batch = batch ? 1.0 / static_cast<double>(batch) : 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto z = logits.row(i);
    const auto y = onehot.row(i);
    auto p = r.probs.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] = std::exp(z[j] - zmax);
      sum += p[j];
    }
    const double log_sum = std::log(sum);
    double row_loss = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] /= sum;
      if (y[j] != 0.0) row_loss -= y[j] * ((z[j] - zmax) - log_sum);
    }
    total += row_loss;
    auto d = r.dlogits.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) d[j] = (p[j] - y[j]) * inv_batch;
  }
  r.loss = total * inv_batch;
  return r;
}

SpectrumReport harmonic_spectrum(const ActivationKind& kind, double f0, double fs, std::size_t n,
                                 double threshold_db) {
  if (!(f0 > 0.0) || !(fs > 0.0)) throw InputError("harmonic_spectrum: f0 and fs must be positive");
  const double periods = f0 * static_cast<double>(n) / fs;
  if (std::abs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods)) {
    throw InputError("harmonic_spectrum: f0*n/fs = " + std::to_string(periods) +
                     " is not an integer number of periods");
  }
  std::vector<double> signal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    signal[i] = activate_scalar(std::sin(2.0 * std::numbers::pi * f0 * t), kind, nullptr);
  }
  SpectrumReport r;
  r.kind = kind.name();
  r.f0 = f0;
  r.magnitudes = dft_magnitude(signal);
  r.frequencies.resize(r.magnitudes.size());
  for (std::size_t k = 0; k < r.frequencies.size(); ++k) {
    r.frequencies[k] = static_cast<double>(k) * fs / static_cast<double>(n);
  }
  const double peak = *std::max_element(r.magnitudes.begin() + 1, r.magnitudes.end());
  if (peak == 0.0) return r;
  const double floor = peak * std::pow(10.0, threshold_db / 20.0);
  const auto step = static_cast<std::size_t>(std::llround(periods));
  if (step == 0) return r;
  for (std::size_t bin = step, h = 1; bin < r.magnitudes.size(); bin += step, ++h) {
    if (r.magnitudes[bin] > floor) {
      r.detected.push_back({static_cast<int>(h), r.frequencies[bin],
                            20.0 * std::log10(r.magnitudes[bin] / peak)});
    }
  }
  return r;
}

void write_spectrum_csv(const SpectrumReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "freq_hz,magnitude\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.frequencies.size(); ++i) {
    out << report.frequencies[i] << ',' << report.magnitudes[i] << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string harmonic_report_json(const SpectrumReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["f0"] = report.f0;
  j["detected"] = nlohmann::json::array();
  for (const auto& h : report.detected) {
    j["detected"].push_back({{"k", h.k}, {"freq_hz", h.freq_hz}, {"rel_db", h.rel_db}});
  }
  return canonical_json(j);
}

}  // namespace qtnn
