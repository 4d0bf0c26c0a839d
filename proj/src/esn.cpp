#include "qtnn/esn.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "qtnn/errors.hpp"

namespace qtnn {

namespace {

void require_fitted(const EsnModel& m) {
  if (!m.fitted()) throw InputError("ESN readout has not been fitted");
  if (m.n_input() != 1 || m.n_output() != 1) {
    throw ShapeError("ESN series operations need one input and one output");
  }
}

// Row-compressed copy of w_res; accumulation follows ascending column order.
struct Sparse {
  std::vector<std::size_t> start, col;
  std::vector<double> val;

  explicit Sparse(const Matrix& w) {
    start.reserve(w.rows() + 1);
    start.push_back(0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const auto row = w.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] != 0.0) {
          col.push_back(c);
          val.push_back(row[c]);
        }
      }
      start.push_back(col.size());
    }
  }
};

void step(const EsnModel& m, const Sparse& sp, std::span<const double> u,
          std::span<const double> h, std::span<double> out) {
  const std::size_t n = m.n_reservoir();
  for (std::size_t r = 0; r < n; ++r) {
    const auto win = m.w_in.row(r);
    double z = win[0];
    for (std::size_t k = 0; k < u.size(); ++k) z += win[k + 1] * u[k];
    for (std::size_t p = sp.start[r]; p < sp.start[r + 1]; ++p) z += sp.val[p] * h[sp.col[p]];
    out[r] = activate_scalar(z, m.act, nullptr);
  }
}

double readout(const EsnModel& m, double u, std::span<const double> h) {
  const auto w = m.w_out.row(0);
  double y = w[0] + w[1] * u;
  for (std::size_t i = 0; i < h.size(); ++i) y += w[i + 2] * h[i];
  return y;
}

}  // namespace

EsnModel esn_build(std::size_t n_reservoir, std::size_t n_input, std::size_t n_output,
                   double rho_target, double density, std::uint64_t seed,
                   const ActivationKind& act, const EsnBuildOptions& opts) {
  if (n_reservoir == 0 || n_input == 0 || n_output == 0) {
    throw ConfigError("ESN sizes must be positive");
  }
  if (!(rho_target > 0.0) || !std::isfinite(rho_target)) {
    throw ConfigError("ESN rho must be positive, got " + std::to_string(rho_target));
  }
  if (rho_target >= 1.0 && !opts.allow_unstable_rho) {
    throw ConfigError("ESN rho >= 1 requires the explicit override");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw ConfigError("ESN density must lie in (0, 1], got " + std::to_string(density));
  }
  EsnModel m;
  m.act = act;
  m.rho_target = rho_target;
  m.density = density;
  for (std::uint64_t stream = 0;; ++stream) {
    Rng rng = Rng::substream(seed, stream);
    m.w_in = Matrix(n_reservoir, 1 + n_input);
    for (double& v : m.w_in.values()) v = rng.uniform(-0.5, 0.5);
    m.w_res = Matrix(n_reservoir, n_reservoir);
    for (double& v : m.w_res.values()) {
      const double keep = rng.uniform();
      const double w = rng.uniform(-0.5, 0.5);
      if (keep < density) v = w;
    }
    const double rho = spectral_radius(m.w_res);
    if (rho > 0.0) {
      m.w_res = (rho_target / rho) * m.w_res;
      return m;
    }
    if (stream > 64) throw NumericalError("ESN reservoir draws keep producing zero spectral radius");
  }
}

void esn_step(const EsnModel& model, std::span<const double> u, std::span<const double> h_prev,
              std::span<double> h_next) {
  if (u.size() != model.n_input() || h_prev.size() != model.n_reservoir() ||
      h_next.size() != model.n_reservoir()) {
    throw ShapeError("esn_step: input or state length mismatch");
  }
  step(model, Sparse(model.w_res), u, h_prev, h_next);
}

Matrix fit_readout(const Matrix& states, const Matrix& targets, double lambda) {
  if (states.cols() != targets.cols()) {
    throw ShapeError("fit_readout: states have " + std::to_string(states.cols()) +
                     " columns, targets " + std::to_string(targets.cols()));
  }
  if (!(lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
  const Matrix st = transpose(states);
  Matrix gram = matmul(states, st);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda;
  const Matrix rhs = matmul(states, transpose(targets));
  try {
    return transpose(solve_spd(gram, rhs));
  } catch (const SingularityError& e) {
    throw SingularityError(std::string(e.what()) + "; use a ridge lambda > 0", e.pivot());
  }
}

Matrix esn_collect_states(const EsnModel& model, std::span<const double> series) {
  if (model.n_input() != 1) throw ShapeError("ESN series operations need one input");
  if (series.size() <= model.washout + 1) {
    throw InputError("series length " + std::to_string(series.size()) +
                     " must exceed washout + 1 = " + std::to_string(model.washout + 1));
  }
  const Sparse sp(model.w_res);
  const std::size_t n = model.n_reservoir();
  const std::size_t steps = series.size() - 1;
  Matrix states(1 + 1 + n, steps - model.washout);
  std::vector<double> h(n, 0.0), next(n);
  for (std::size_t t = 0; t < steps; ++t) {
    const double u = series[t];
    step(model, sp, std::span<const double>(&u, 1), h, next);
    h.swap(next);
    if (t < model.washout) continue;
    const std::size_t c = t - model.washout;
    states(0, c) = 1.0;
    states(1, c) = u;
    for (std::size_t i = 0; i < n; ++i) states(2 + i, c) = h[i];
  }
  return states;
}

const Matrix& esn_fit(EsnModel& model, std::span<const double> series) {
  const Matrix states = esn_collect_states(model, series);
  Matrix targets(1, states.cols());
  for (std::size_t c = 0; c < states.cols(); ++c) targets(0, c) = series[model.washout + c + 1];
  model.w_out = fit_readout(states, targets, model.ridge_lambda);
  return model.w_out;
}

std::vector<double> esn_teacher_forced(const EsnModel& model, std::span<const double> series) {
  require_fitted(model);
  const Sparse sp(model.w_res);
  const std::size_t n = model.n_reservoir();
  std::vector<double> h(n, 0.0), next(n), out;
  if (series.size() < 2) return out;
  out.reserve(series.size() - 1);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    const double u = series[t];
    step(model, sp, std::span<const double>(&u, 1), h, next);
    h.swap(next);
    out.push_back(readout(model, u, h));
  }
  return out;
}

std::vector<double> esn_free_run(const EsnModel& model, std::span<const double> warm,
                                 std::size_t horizon) {
  require_fitted(model);
  if (warm.size() <= model.washout) {
    throw InputError("warmup length " + std::to_string(warm.size()) +
                     " must cover the washout of " + std::to_string(model.washout));
  }
  const Sparse sp(model.w_res);
  const std::size_t n = model.n_reservoir();
  std::vector<double> h(n, 0.0), next(n);
  double y = 0.0;
  for (double u : warm) {
    step(model, sp, std::span<const double>(&u, 1), h, next);
    h.swap(next);
    y = readout(model, u, h);
  }
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    out.push_back(y);
    if (!std::isfinite(y)) {
      throw NumericalError("free run diverged at step " + std::to_string(s));
    }
    const double u = y;
    step(model, sp, std::span<const double>(&u, 1), h, next);
    h.swap(next);
    y = readout(model, u, h);
  }
  return out;
}

double mse_metric(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ShapeError("mse: lengths " + std::to_string(pred.size()) + " and " +
                     std::to_string(target.size()) + " differ");
  }
  if (pred.empty()) throw InputError("mse of empty arrays");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double nmse_metric(std::span<const double> pred, std::span<const double> target) {
  const double mse = mse_metric(pred, target);
  double mean = 0.0;
  for (double v : target) mean += v;
  mean /= static_cast<double>(target.size());
  double var = 0.0;
  for (double v : target) var += (v - mean) * (v - mean);
  var /= static_cast<double>(target.size());
  if (var == 0.0) throw NumericalError("nmse: target has zero variance");
  return mse / var;
}

void write_forecast_csv(const std::filesystem::path& path, std::span<const double> target,
                        std::span<const double> prediction) {
  if (target.size() != prediction.size()) throw ShapeError("forecast export: length mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "t,target,prediction\n";
  char buf[96];
  for (std::size_t i = 0; i < target.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, target[i], prediction[i]);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace qtnn
