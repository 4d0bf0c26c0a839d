#include "qtnn/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <string>

#include "qtnn/errors.hpp"

namespace qtnn {

using cplx = std::complex<double>;

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "barrier") return ScenarioKind::barrier;
  if (name == "single_slit") return ScenarioKind::single_slit;
  if (name == "double_slit") return ScenarioKind::double_slit;
  throw ConfigError("unknown scenario '" + name + "' (barrier, single_slit, double_slit)");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::barrier: return "barrier";
    case ScenarioKind::single_slit: return "single_slit";
    case ScenarioKind::double_slit: return "double_slit";
  }
  return "barrier";
}

Stencil parse_stencil(const std::string& name) {
  if (name == "five_point") return Stencil::five_point;
  if (name == "compact") return Stencil::compact;
  throw ConfigError("unknown stencil '" + name + "' (five_point, compact)");
}

std::string to_string(Stencil stencil) {
  return stencil == Stencil::compact ? "compact" : "five_point";
}

nlohmann::json Scenario::to_json() const {
  return {{"kind", to_string(kind)}, {"barrier_x", barrier_x}, {"thickness", thickness},
          {"v0", v0},                {"slit_width", slit_width},
          {"slit_separation", slit_separation},
          {"x0", x0},                {"y0", y0},
          {"sigma", sigma},          {"k0x", k0x}};
}

nlohmann::json WpSummary::to_json() const {
  return {{"reflected", reflected}, {"transmitted", transmitted}, {"residual", residual},
          {"norm", norm},           {"steps", steps}};
}

// Per-line Thomas factorizations of (I + i·a·H) for the x half step and the
// y full step. For each line: cp[k] = c/m_k and inv_m[k] = 1/m_k.
struct AdiFactors {
  double dt = 0.0;
  Stencil stencil = Stencil::compact;
  std::vector<cplx> x_cp, x_inv, y_cp, y_inv;
};

namespace {

// One line of the Cayley step (I + iaH)ψ' = (I − iaH)ψ with
// H = −½·M⁻¹D² + V/2, multiplied through by M so both sides are tridiagonal:
//   (M + ia(−½D² + M·V/2))ψ' = (M − ia(−½D² + M·V/2))ψ.
// M = I for the five-point stencil and tridiag(1, 10, 1)/12 for the compact one.
// Row k couples to k−1 through m1 + ia(−½d0 + m1·v_{k−1}/2), so sub- and
// super-diagonals differ wherever V varies.
struct LineOp {
  double m0, m1;  // diagonal and off-diagonal of M
  double d0;      // 1/dx²
  double a;

  cplx diag(double vk) const { return {m0, a * (d0 + m0 * 0.5 * vk)}; }
  cplx off(double vn) const { return {m1, a * (-0.5 * d0 + m1 * 0.5 * vn)}; }
};

LineOp line_op(Stencil stencil, double a, double dx) {
  const bool compact = stencil == Stencil::compact;
  return {compact ? 10.0 / 12.0 : 1.0, compact ? 1.0 / 12.0 : 0.0, 1.0 / (dx * dx), a};
}

void factor_line(const double* v, std::size_t stride, std::size_t n, const LineOp& op, cplx* cp,
                 cplx* inv_m) {
  cplx prev_cp(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx b = op.diag(v[k * stride]);
    const cplx m = k == 0 ? b : b - op.off(v[(k - 1) * stride]) * prev_cp;
    inv_m[k] = 1.0 / m;
    cp[k] = k + 1 < n ? op.off(v[(k + 1) * stride]) * inv_m[k] : cplx(0.0, 0.0);
    prev_cp = cp[k];
  }
}

std::shared_ptr<const AdiFactors> build_factors(const Grid2D& g) {
  auto f = std::make_shared<AdiFactors>();
  f->dt = g.dt;
  f->stencil = g.stencil;
  const std::size_t n = g.nx * g.ny;
  f->x_cp.resize(n);
  f->x_inv.resize(n);
  f->y_cp.resize(n);
  f->y_inv.resize(n);
  const double* v = g.v.values().data();
  // Cayley step of length s uses a = s/2: x half step s = dt/2, y step s = dt.
  const LineOp xo = line_op(g.stencil, g.dt / 4.0, g.dx);
  const LineOp yo = line_op(g.stencil, g.dt / 2.0, g.dx);
  for (std::size_t j = 0; j < g.ny; ++j) {
    factor_line(v + j * g.nx, 1, g.nx, xo, &f->x_cp[j * g.nx], &f->x_inv[j * g.nx]);
  }
  for (std::size_t i = 0; i < g.nx; ++i) {
    factor_line(v + i, g.nx, g.ny, yo, &f->y_cp[i * g.ny], &f->y_inv[i * g.ny]);
  }
  return f;
}

// Applies the right-hand side and solves for ψ' in place on `line`.
void sweep_line(cplx* line, const double* v, std::size_t stride, std::size_t n, const LineOp& op,
                const cplx* cp, const cplx* inv_m, cplx* rhs) {
  // (M − iaK)ψ = 2Mψ − (M + iaK)ψ; conj of the entries flips the sign of ia.
  for (std::size_t k = 0; k < n; ++k) {
    cplx r = std::conj(op.diag(v[k * stride])) * line[k];
    if (k > 0) r += std::conj(op.off(v[(k - 1) * stride])) * line[k - 1];
    if (k + 1 < n) r += std::conj(op.off(v[(k + 1) * stride])) * line[k + 1];
    rhs[k] = r;
  }
  cplx prev(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    prev = (k == 0 ? rhs[k] : rhs[k] - op.off(v[(k - 1) * stride]) * prev) * inv_m[k];
    rhs[k] = prev;
  }
  line[n - 1] = rhs[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) line[k] = rhs[k] - cp[k] * line[k + 1];
}

void validate(const GridSpec& spec, const Scenario& s, double y0) {
  if (spec.nx < 3 || spec.ny < 3) throw ConfigError("grid needs at least 3×3 nodes");
  if (!(spec.dx > 0.0) || !std::isfinite(spec.dx)) throw ConfigError("dx must be positive");
  if (!(spec.dt != 0.0) || !std::isfinite(spec.dt)) throw ConfigError("dt must be nonzero");
  if (!(s.sigma > 0.0)) throw ConfigError("packet sigma must be positive");
  if (!(s.v0 >= 0.0)) throw ConfigError("barrier height must be >= 0");
  if (!std::isfinite(s.k0x)) throw ConfigError("k0x must be finite");
  const double lx = static_cast<double>(spec.nx - 1) * spec.dx;
  const double ly = static_cast<double>(spec.ny - 1) * spec.dx;
  const double margin = 5.0 * s.sigma;
  if (s.x0 - margin < 0.0 || s.x0 + margin > lx || y0 - margin < 0.0 || y0 + margin > ly) {
    throw ConfigError("packet at (" + std::to_string(s.x0) + ", " + std::to_string(y0) +
                      ") lacks a 5 sigma margin inside the domain");
  }
  if (s.v0 > 0.0) {
    if (!(s.thickness > 0.0)) throw ConfigError("barrier thickness must be positive");
    if (s.barrier_x - s.x0 < margin) {
      throw ConfigError("packet overlaps the barrier: centre " + std::to_string(s.x0) +
                        " is within 5 sigma of the wall at " + std::to_string(s.barrier_x));
    }
    if (s.barrier_x + s.thickness > lx) throw ConfigError("barrier extends past the domain");
  }
  if (s.kind != ScenarioKind::barrier) {
    if (!(s.slit_width > 0.0)) throw ConfigError("slit width must be positive");
    const double half_extent = s.kind == ScenarioKind::single_slit
                                   ? s.slit_width / 2.0
                                   : (s.slit_separation + s.slit_width) / 2.0;
    if (s.kind == ScenarioKind::double_slit && !(s.slit_separation > s.slit_width)) {
      throw ConfigError("slit separation must exceed the slit width");
    }
    if (y0 - half_extent <= 0.0 || y0 + half_extent >= ly) {
      throw ConfigError("slits do not fit inside the domain");
    }
  }
}

}  // namespace

Grid2D wp_init(const GridSpec& spec, const Scenario& s) {
  const double yc = static_cast<double>(spec.ny - 1) * spec.dx / 2.0;
  const double y0 = s.y0 < 0.0 ? yc : s.y0;
  validate(spec, s, y0);
  Grid2D g;
  g.nx = spec.nx;
  g.ny = spec.ny;
  g.dx = spec.dx;
  g.dt = spec.dt;
  g.stencil = spec.stencil;
  g.psi_re = Matrix(g.ny, g.nx);
  g.psi_im = Matrix(g.ny, g.nx);
  g.v = Matrix(g.ny, g.nx);

  const bool centred = s.y0 < 0.0;
  const double inv4s2 = 1.0 / (4.0 * s.sigma * s.sigma);
  double sum = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    // Offsets from the centre line come from integers so mirrored rows match exactly.
    const double dy =
        centred ? std::abs(2.0 * static_cast<double>(j) - static_cast<double>(g.ny - 1)) * g.dx / 2.0
                : static_cast<double>(j) * g.dx - y0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = static_cast<double>(i) * g.dx;
      const double ddx = x - s.x0;
      const double amp = std::exp(-(ddx * ddx + dy * dy) * inv4s2);
      g.psi_re(j, i) = amp * std::cos(s.k0x * x);
      g.psi_im(j, i) = amp * std::sin(s.k0x * x);
      sum += amp * amp;
    }
  }
  const double scale = 1.0 / std::sqrt(sum * g.dx * g.dx);
  for (double& v : g.psi_re.values()) v *= scale;
  for (double& v : g.psi_im.values()) v *= scale;

  if (s.v0 > 0.0) {
    g.barrier_begin = static_cast<std::size_t>(std::lround(s.barrier_x / g.dx));
    const auto width = std::max<long>(1, std::lround(s.thickness / g.dx));
    g.barrier_end = std::min(g.nx, g.barrier_begin + static_cast<std::size_t>(width));
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double dist =
          std::abs(2.0 * static_cast<double>(j) - static_cast<double>(g.ny - 1)) * g.dx / 2.0;
      const double off = centred ? dist : std::abs(static_cast<double>(j) * g.dx - y0);
      bool open = false;
      if (s.kind == ScenarioKind::single_slit) {
        open = off < s.slit_width / 2.0;
      } else if (s.kind == ScenarioKind::double_slit) {
        open = std::abs(off - s.slit_separation / 2.0) < s.slit_width / 2.0;
      }
      if (open) continue;
      for (std::size_t i = g.barrier_begin; i < g.barrier_end; ++i) g.v(j, i) = s.v0;
    }
  } else {
    g.barrier_begin = g.barrier_end =
        std::min(g.nx, static_cast<std::size_t>(std::max(0L, std::lround(s.barrier_x / g.dx))));
  }
  return g;
}

void wp_step(Grid2D& g) {
  if (g.psi_re.rows() != g.ny || g.psi_re.cols() != g.nx || g.v.rows() != g.ny) {
    throw ShapeError("wp_step: grid is not initialized");
  }
  if (!g.factors || g.factors->dt != g.dt || g.factors->stencil != g.stencil) g.factors = build_factors(g);
  const AdiFactors& f = *g.factors;
  const std::size_t nmax = std::max(g.nx, g.ny);
  std::vector<cplx> line(nmax), rhs(nmax);
  const double* v = g.v.values().data();
  const LineOp xo = line_op(g.stencil, g.dt / 4.0, g.dx);
  const LineOp yo = line_op(g.stencil, g.dt / 2.0, g.dx);

  auto x_sweep = [&] {
    for (std::size_t j = 0; j < g.ny; ++j) {
      auto re = g.psi_re.row(j);
      auto im = g.psi_im.row(j);
      for (std::size_t i = 0; i < g.nx; ++i) line[i] = cplx(re[i], im[i]);
      sweep_line(line.data(), v + j * g.nx, 1, g.nx, xo, &f.x_cp[j * g.nx], &f.x_inv[j * g.nx],
                 rhs.data());
      for (std::size_t i = 0; i < g.nx; ++i) {
        re[i] = line[i].real();
        im[i] = line[i].imag();
      }
    }
  };
  x_sweep();
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) line[j] = cplx(g.psi_re(j, i), g.psi_im(j, i));
    sweep_line(line.data(), v + i, g.nx, g.ny, yo, &f.y_cp[i * g.ny], &f.y_inv[i * g.ny],
               rhs.data());
    for (std::size_t j = 0; j < g.ny; ++j) {
      g.psi_re(j, i) = line[j].real();
      g.psi_im(j, i) = line[j].imag();
    }
  }
  x_sweep();
  ++g.step_index;
  const double n = wp_norm(g);
  if (!(n <= 1.0 + 1e-3)) {
    throw NumericalError("wavepacket norm diverged to " + std::to_string(n) + " at step " +
                         std::to_string(g.step_index));
  }
}

double wp_norm(const Grid2D& g) {
  double s = 0.0;
  auto re = g.psi_re.values();
  auto im = g.psi_im.values();
  for (std::size_t k = 0; k < re.size(); ++k) s += re[k] * re[k] + im[k] * im[k];
  return s * g.dx * g.dx;
}

Matrix wp_density(const Grid2D& g) {
  Matrix d(g.ny, g.nx);
  auto re = g.psi_re.values();
  auto im = g.psi_im.values();
  auto dv = d.values();
  for (std::size_t k = 0; k < dv.size(); ++k) dv[k] = re[k] * re[k] + im[k] * im[k];
  return d;
}

std::pair<double, double> wp_centroid(const Grid2D& g) {
  double sx = 0.0, sy = 0.0, total = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double p = g.psi_re(j, i) * g.psi_re(j, i) + g.psi_im(j, i) * g.psi_im(j, i);
      sx += p * static_cast<double>(i);
      sy += p * static_cast<double>(j);
      total += p;
    }
  }
  return {sx / total * g.dx, sy / total * g.dx};
}

WpSummary wp_partition(const Grid2D& g) {
  WpSummary s;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double p =
          (g.psi_re(j, i) * g.psi_re(j, i) + g.psi_im(j, i) * g.psi_im(j, i)) * g.dx * g.dx;
      if (i < g.barrier_begin) {
        s.reflected += p;
      } else if (i >= g.barrier_end) {
        s.transmitted += p;
      } else {
        s.residual += p;
      }
    }
  }
  s.norm = s.reflected + s.transmitted + s.residual;
  s.steps = g.step_index;
  return s;
}

WpRun wp_run(const GridSpec& spec, const Scenario& scenario, std::size_t n_steps,
             std::size_t snapshot_every) {
  if (n_steps < 1) throw ConfigError("wavepacket run needs at least one step");
  WpRun run;
  Grid2D g = wp_init(spec, scenario);
  run.frames.push_back({0, 0.0, wp_density(g)});
  for (std::size_t s = 1; s <= n_steps; ++s) {
    wp_step(g);
    const bool snap = (snapshot_every > 0 && s % snapshot_every == 0) || s == n_steps;
    if (snap) run.frames.push_back({s, static_cast<double>(s) * g.dt, wp_density(g)});
  }
  run.summary = wp_partition(g);
  run.final_grid = std::move(g);
  return run;
}

FrameFormat parse_frame_format(const std::string& name) {
  if (name == "text" || name == "txt") return FrameFormat::text;
  if (name == "pgm") return FrameFormat::pgm;
  throw ConfigError("unknown frame format '" + name + "' (text, pgm)");
}

namespace {

void write_text_frame(const std::filesystem::path& path, const Matrix& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.10g", d(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_pgm_frame(const std::filesystem::path& path, const Matrix& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << d.cols() << ' ' << d.rows() << "\n65535\n";
  const double peak = max_abs(d);
  std::vector<unsigned char> bytes;
  bytes.reserve(d.size() * 2);
  for (double v : d.values()) {
    const auto q = static_cast<unsigned>(peak > 0.0 ? std::lround(v / peak * 65535.0) : 0L);
    bytes.push_back(static_cast<unsigned char>(q >> 8));
    bytes.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

nlohmann::json export_frames(const WpRun& run, const GridSpec& spec, const Scenario& scenario,
                             const std::filesystem::path& dir, FrameFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : run.frames) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%06zu.%s", f.step,
                  format == FrameFormat::pgm ? "pgm" : "txt");
    if (format == FrameFormat::pgm) {
      write_pgm_frame(dir / name, f.density);
    } else {
      write_text_frame(dir / name, f.density);
    }
    files.push_back({{"file", name}, {"step", f.step}, {"time", f.time}});
  }
  nlohmann::json manifest = {{"scenario", scenario.to_json()},
                             {"dt", spec.dt},
                             {"dx", spec.dx},
                             {"stencil", to_string(spec.stencil)},
                             {"nx", spec.nx},
                             {"ny", spec.ny},
                             {"steps", run.summary.steps},
                             {"frames", files},
                             {"summary", run.summary.to_json()}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace qtnn
