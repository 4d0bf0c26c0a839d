#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtnn/numerics.hpp"

namespace qtnn {

enum class ScenarioKind { barrier, single_slit, double_slit };

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

/// Nondimensional units, ħ = m = 1. Lengths are in the same units as dx.
struct Scenario {
  ScenarioKind kind = ScenarioKind::barrier;
  double barrier_x = 21.0;  // left edge of the wall
  double thickness = 0.5;
  double v0 = 15.625;
  double slit_width = 1.0;
  double slit_separation = 4.0;  // centre-to-centre
  double x0 = 10.0;
  double y0 = -1.0;  // negative → domain centre line
  double sigma = 2.0;
  double k0x = 5.0;

  nlohmann::json to_json() const;
};

/// Spatial discretization of each 1D line operator.
///   five_point: second-order central difference (the 2D 5-point Laplacian).
///   compact: fourth-order compact (Numerov) form M⁻¹D² with
///            M = tridiag(1, 10, 1)/12; same tridiagonal cost, much smaller
///            lattice dispersion at k·dx ≈ 0.5.
enum class Stencil { five_point, compact };

Stencil parse_stencil(const std::string& name);
std::string to_string(Stencil stencil);

struct GridSpec {
  std::size_t nx = 400;
  std::size_t ny = 400;
  double dx = 0.1;
  double dt = 0.005;
  Stencil stencil = Stencil::compact;
};

struct AdiFactors;

/// ψ and V on nodes x_i = i·dx, y_j = j·dx; matrices are ny×nx (row = y).
/// ψ vanishes on the ring of nodes just outside the grid.
struct Grid2D {
  std::size_t nx = 0, ny = 0;
  double dx = 0.0, dt = 0.0;
  Stencil stencil = Stencil::compact;
  Matrix psi_re, psi_im;
  Matrix v;
  std::size_t step_index = 0;
  // Column range [barrier_begin, barrier_end) occupied by the wall.
  std::size_t barrier_begin = 0, barrier_end = 0;

  // Factorizations for the current dt and stencil; rebuilt when either changes. The
  // potential is treated as fixed after wp_init.
  mutable std::shared_ptr<const AdiFactors> factors;
};

/// Gaussian packet with unit discrete norm and the scenario's potential.
/// Throws ConfigError when the packet lacks a 5σ margin to the walls or to
/// the barrier, or when the slits do not fit.
Grid2D wp_init(const GridSpec& spec, const Scenario& scenario);

/// One Strang-split ADI Crank–Nicolson step: x half step, y full step,
/// x half step. A negative dt steps backwards in time.
void wp_step(Grid2D& grid);

double wp_norm(const Grid2D& grid);
Matrix wp_density(const Grid2D& grid);
/// Expectation values ⟨x⟩, ⟨y⟩.
std::pair<double, double> wp_centroid(const Grid2D& grid);

struct Frame {
  std::size_t step = 0;
  double time = 0.0;
  Matrix density;
};

struct WpSummary {
  double reflected = 0.0;    // left of the wall
  double transmitted = 0.0;  // right of the wall
  double residual = 0.0;     // inside the wall
  double norm = 0.0;
  std::size_t steps = 0;

  nlohmann::json to_json() const;
};

struct WpRun {
  std::vector<Frame> frames;
  WpSummary summary;
  Grid2D final_grid;
};

WpSummary wp_partition(const Grid2D& grid);

/// Steps n_steps times, keeping |ψ|² at step 0 and every snapshot_every
/// steps (0 → only the initial and final frames).
WpRun wp_run(const GridSpec& spec, const Scenario& scenario, std::size_t n_steps,
             std::size_t snapshot_every);

enum class FrameFormat { text, pgm };
FrameFormat parse_frame_format(const std::string& name);

/// Writes one file per frame plus manifest.json into `dir`; returns the manifest.
nlohmann::json export_frames(const WpRun& run, const GridSpec& spec, const Scenario& scenario,
                             const std::filesystem::path& dir, FrameFormat format);

}  // namespace qtnn
