#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qtnn/activation.hpp"
#include "qtnn/numerics.hpp"

namespace qtnn {

/// Echo state network: h_t = act(w_in·[1; u_t] + w_res·h_{t−1}),
/// y_t = w_out·[1; u_t; h_t]. Only w_out is learned.
struct EsnModel {
  Matrix w_in;   // N×(1+M), column 0 is the bias
  Matrix w_res;  // N×N
  Matrix w_out;  // K×(1+M+N), empty until fitted
  ActivationKind act = ActivationKind::tanh();
  double rho_target = 0.95;
  double density = 0.1;
  std::size_t washout = 100;
  double ridge_lambda = 1e-8;

  std::size_t n_reservoir() const { return w_res.rows(); }
  std::size_t n_input() const { return w_in.cols() - 1; }
  std::size_t n_output() const { return w_out.rows(); }
  std::size_t state_size() const { return 1 + n_input() + n_reservoir(); }
  bool fitted() const { return !w_out.empty(); }
};

struct EsnBuildOptions {
  /// Permits rho_target >= 1, which usually loses the echo state property.
  bool allow_unstable_rho = false;
};

/// w_in, w_res ~ Uniform(−0.5, 0.5); w_res keeps each entry with probability
/// `density` and is rescaled to the target spectral radius.
EsnModel esn_build(std::size_t n_reservoir, std::size_t n_input, std::size_t n_output,
                   double rho_target, double density, std::uint64_t seed,
                   const ActivationKind& act, const EsnBuildOptions& opts = {});

/// One reservoir update for a single scalar-series input (M = 1 or general M).
void esn_step(const EsnModel& model, std::span<const double> u, std::span<const double> h_prev,
              std::span<double> h_next);

/// Ridge readout: returns w_out = Y·Hᵀ(H·Hᵀ + λI)⁻¹ for states H (D×T) and
/// targets Y (K×T). Throws SingularityError when the Gram matrix is singular.
Matrix fit_readout(const Matrix& states, const Matrix& targets, double lambda);

/// Teacher-forced run over series[0..T−2] targeting series[1..T−1]; states
/// before the washout are discarded. Sets and returns model.w_out.
const Matrix& esn_fit(EsnModel& model, std::span<const double> series);

/// Extended states [1; u_t; h_t] (D×(T−1−washout)) collected during the
/// teacher-forced run used by esn_fit.
Matrix esn_collect_states(const EsnModel& model, std::span<const double> series);

/// One-step-ahead predictions ŷ_t of series[t+1] under teacher forcing,
/// t = 0..T−2, starting from a zero state.
std::vector<double> esn_teacher_forced(const EsnModel& model, std::span<const double> series);

/// Teacher-forced warmup on `warm`, then `horizon` steps where each
/// prediction becomes the next input. Element 0 predicts the value that
/// follows warm.back().
std::vector<double> esn_free_run(const EsnModel& model, std::span<const double> warm,
                                 std::size_t horizon);

double mse_metric(std::span<const double> pred, std::span<const double> target);
/// MSE divided by the variance of `target`.
double nmse_metric(std::span<const double> pred, std::span<const double> target);

/// Writes `t,target,prediction`.
void write_forecast_csv(const std::filesystem::path& path, std::span<const double> target,
                        std::span<const double> prediction);

}  // namespace qtnn
