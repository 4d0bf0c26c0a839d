#include <cmath>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "qtnn/errors.hpp"
#include "qtnn/wavepacket.hpp"

using qtnn::GridSpec;
using qtnn::Scenario;
using qtnn::ScenarioKind;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.nx = 200;
  g.ny = 120;
  g.dx = 0.1;
  g.dt = 0.005;
  return g;
}

Scenario free_packet(double k0x) {
  Scenario s;
  s.v0 = 0.0;
  s.x0 = 8.0;
  s.sigma = 1.0;
  s.k0x = k0x;
  return s;
}

double mirror_error(const qtnn::Matrix& d) {
  double worst = 0.0;
  for (std::size_t j = 0; j < d.rows(); ++j)
    for (std::size_t i = 0; i < d.cols(); ++i)
      worst = std::max(worst, std::abs(d(j, i) - d(d.rows() - 1 - j, i)));
  return worst;
}

}  // namespace

TEST_SUITE("wavepacket") {

TEST_CASE("initial packet is normalized and the free potential vanishes") {
  const auto g = qtnn::wp_init(small_grid(), free_packet(5.0));
  CHECK(std::abs(qtnn::wp_norm(g) - 1.0) < 1e-8);
  for (double v : g.v.values()) CHECK(v == 0.0);
  const auto [cx, cy] = qtnn::wp_centroid(g);
  CHECK(cx == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(cy == doctest::Approx(0.5 * 119 * 0.1).epsilon(1e-6));
}

TEST_CASE("barrier potential occupies the wall columns") {
  Scenario s;
  s.x0 = 8.0;
  s.sigma = 1.0;
  s.barrier_x = 14.0;
  const auto g = qtnn::wp_init(small_grid(), s);
  CHECK(g.barrier_begin == 140);
  CHECK(g.barrier_end == 145);
  for (std::size_t j = 0; j < g.ny; ++j) {
    CHECK(g.v(j, 139) == 0.0);
    CHECK(g.v(j, 140) == s.v0);
    CHECK(g.v(j, 144) == s.v0);
    CHECK(g.v(j, 145) == 0.0);
  }
  for (double v : g.v.values()) CHECK(v >= 0.0);
}

TEST_CASE("slit potentials are mirror images about the packet axis") {
  for (auto kind : {ScenarioKind::single_slit, ScenarioKind::double_slit}) {
    Scenario s;
    s.kind = kind;
    s.x0 = 8.0;
    s.sigma = 1.0;
    s.barrier_x = 14.0;
    const auto g = qtnn::wp_init(small_grid(), s);
    CHECK(mirror_error(g.v) == 0.0);
    CHECK(mirror_error(qtnn::wp_density(g)) == 0.0);
    // Some wall nodes must be open.
    std::size_t open = 0;
    for (std::size_t j = 0; j < g.ny; ++j) open += g.v(j, 142) == 0.0;
    CHECK(open > 0);
    CHECK(open < g.ny);
  }
}

TEST_CASE("invalid scenarios are rejected") {
  Scenario s;
  s.x0 = 8.0;
  s.sigma = 1.0;
  s.barrier_x = 10.0;
  CHECK_THROWS_AS(qtnn::wp_init(small_grid(), s), qtnn::ConfigError);
  s = free_packet(5.0);
  s.x0 = 2.0;
  CHECK_THROWS_AS(qtnn::wp_init(small_grid(), s), qtnn::ConfigError);
  s = free_packet(5.0);
  s.sigma = 0.0;
  CHECK_THROWS_AS(qtnn::wp_init(small_grid(), s), qtnn::ConfigError);
  Scenario slit;
  slit.kind = ScenarioKind::double_slit;
  slit.x0 = 8.0;
  slit.sigma = 1.0;
  slit.barrier_x = 14.0;
  slit.slit_separation = 0.5;
  CHECK_THROWS_AS(qtnn::wp_init(small_grid(), slit), qtnn::ConfigError);
  CHECK_THROWS_AS(qtnn::parse_scenario_kind("triple_slit"), qtnn::ConfigError);
  CHECK(qtnn::parse_scenario_kind("double_slit") == ScenarioKind::double_slit);
}

TEST_CASE("one free step preserves the norm") {
  auto g = qtnn::wp_init(small_grid(), free_packet(5.0));
  qtnn::wp_step(g);
  CHECK(std::abs(qtnn::wp_norm(g) - 1.0) < 1e-10);
  CHECK(g.step_index == 1);
}

TEST_CASE("a stationary packet stays put") {
  auto g = qtnn::wp_init(small_grid(), free_packet(0.0));
  const auto [x0, y0] = qtnn::wp_centroid(g);
  for (int n = 0; n < 100; ++n) qtnn::wp_step(g);
  const auto [x1, y1] = qtnn::wp_centroid(g);
  CHECK(std::abs(x1 - x0) < 1e-6);
  CHECK(std::abs(y1 - y0) < 1e-6);
}

TEST_CASE("free packet moves at the group velocity") {
  Scenario s = free_packet(5.0);
  s.sigma = 2.0;
  s.x0 = 12.0;
  auto g = qtnn::wp_init(GridSpec{}, s);
  const double start = qtnn::wp_centroid(g).first;
  const int steps = 200;
  for (int n = 0; n < steps; ++n) qtnn::wp_step(g);
  const double v = (qtnn::wp_centroid(g).first - start) / (steps * g.dt);
  CHECK(std::abs(v - 5.0) / 5.0 < 0.01);
}

TEST_CASE("five-point stencil follows the lattice dispersion") {
  // Second-order differences move a k = 5 packet at sin(k dx)/dx, not k.
  GridSpec spec;
  spec.stencil = qtnn::Stencil::five_point;
  Scenario s = free_packet(5.0);
  s.sigma = 2.0;
  s.x0 = 12.0;
  auto g = qtnn::wp_init(spec, s);
  const double start = qtnn::wp_centroid(g).first;
  for (int n = 0; n < 200; ++n) qtnn::wp_step(g);
  CHECK(std::abs(qtnn::wp_norm(g) - 1.0) < 1e-10);
  const double v = (qtnn::wp_centroid(g).first - start) / (200 * g.dt);
  CHECK(v == doctest::Approx(std::sin(0.5) / 0.1).epsilon(0.01));
  CHECK(qtnn::parse_stencil("five_point") == qtnn::Stencil::five_point);
  CHECK_THROWS_AS(qtnn::parse_stencil("nine_point"), qtnn::ConfigError);
}

TEST_CASE("norm drift over 500 steps in every scenario") {
  for (auto kind : {ScenarioKind::barrier, ScenarioKind::single_slit, ScenarioKind::double_slit}) {
    Scenario s;
    s.kind = kind;
    s.x0 = 8.0;
    s.sigma = 1.0;
    s.barrier_x = 14.0;
    auto g = qtnn::wp_init(small_grid(), s);
    for (int n = 0; n < 500; ++n) qtnn::wp_step(g);
    CHECK(std::abs(qtnn::wp_norm(g) - 1.0) < 1e-6);
  }
}

TEST_CASE("stepping backwards retraces the evolution") {
  Scenario s;
  s.x0 = 8.0;
  s.sigma = 1.0;
  s.barrier_x = 14.0;
  auto g = qtnn::wp_init(small_grid(), s);
  const auto re0 = g.psi_re;
  const auto im0 = g.psi_im;
  for (int n = 0; n < 200; ++n) qtnn::wp_step(g);
  g.dt = -g.dt;
  for (int n = 0; n < 200; ++n) qtnn::wp_step(g);
  CHECK(qtnn::max_abs(g.psi_re - re0) < 1e-6);
  CHECK(qtnn::max_abs(g.psi_im - im0) < 1e-6);
}

TEST_CASE("default barrier run partitions the probability") {
  const auto run = qtnn::wp_run(GridSpec{}, Scenario{}, 600, 200);
  const auto& s = run.summary;
  CHECK(std::abs(s.reflected + s.transmitted + s.residual - 1.0) < 1e-4);
  // Mean energy k0x²/2 = 12.5 lies below v0, so most of the packet reflects.
  CHECK(s.transmitted > 0.0);
  CHECK(s.transmitted < 0.5);
  CHECK(run.frames.size() == 4);
  CHECK(run.frames.back().step == 600);
  CHECK(s.to_json()["steps"] == 600);
}

TEST_CASE("double slit evolution keeps mirror symmetry") {
  Scenario s;
  s.kind = ScenarioKind::double_slit;
  s.x0 = 8.0;
  s.sigma = 1.0;
  s.barrier_x = 14.0;
  const auto run = qtnn::wp_run(small_grid(), s, 400, 0);
  CHECK(mirror_error(run.frames.back().density) < 1e-6);
}

TEST_CASE("transmission is stable under grid refinement") {
  const auto coarse = qtnn::wp_run(GridSpec{}, Scenario{}, 600, 0).summary.transmitted;
  GridSpec fine;
  fine.nx = 800;
  fine.ny = 800;
  fine.dx = 0.05;
  fine.dt = 0.0025;
  const auto refined = qtnn::wp_run(fine, Scenario{}, 1200, 0).summary.transmitted;
  CHECK(std::abs(refined - coarse) / refined < 0.05);
}

TEST_CASE("frames are exported with a manifest") {
  const GridSpec spec = small_grid();
  const Scenario s = free_packet(5.0);
  const auto run = qtnn::wp_run(spec, s, 10, 5);
  for (auto format : {qtnn::FrameFormat::text, qtnn::FrameFormat::pgm}) {
    const auto dir = oracle::temp_dir("frames");
    const auto manifest = qtnn::export_frames(run, spec, s, dir, format);
    CHECK(manifest["frames"].size() == 3);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    const auto first = dir / manifest["frames"][0]["file"].get<std::string>();
    std::ifstream in(first, std::ios::binary);
    if (format == qtnn::FrameFormat::pgm) {
      std::string magic, w, h, maxval;
      in >> magic >> w >> h >> maxval;
      CHECK(magic == "P5");
      CHECK(w == "200");
      CHECK(h == "120");
      CHECK(maxval == "65535");
      CHECK(std::filesystem::file_size(first) == 17 + 200 * 120 * 2);
    } else {
      std::size_t lines = 0;
      for (std::string line; std::getline(in, line);) ++lines;
      CHECK(lines == 120);
    }
  }
  CHECK_THROWS_AS(qtnn::parse_frame_format("png"), qtnn::ConfigError);
}

TEST_CASE("a blown-up norm is reported with its step") {
  auto g = qtnn::wp_init(small_grid(), free_packet(5.0));
  g.psi_re = 1.01 * g.psi_re;
  g.psi_im = 1.01 * g.psi_im;
  try {
    qtnn::wp_step(g);
    FAIL("expected a numerical error");
  } catch (const qtnn::NumericalError& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

}  // TEST_SUITE
