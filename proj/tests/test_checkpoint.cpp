#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "qtnn/checkpoint.hpp"
#include "qtnn/errors.hpp"

using qtnn::ActivationKind;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

ActivationKind odd_qt() {
  qtnn::BarrierParams p;
  p.v0 = 3.5;
  p.a = 0.75;
  p.ampl = 4.0;
  p.mode = qtnn::QtMode::bipolar;
  return ActivationKind::qt(p);
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("header layout") {
  const auto dir = oracle::temp_dir("ckpt_layout");
  qtnn::Checkpoint c;
  c.arch = qtnn::Architecture::rnn;
  c.act = odd_qt();
  c.tensors = {qtnn::Matrix::from_rows({{1.5, -2.0}})};
  qtnn::write_checkpoint(dir / "c", c);
  const std::string b = slurp(dir / "c");
  CHECK(b.substr(0, 8) == "QTNNCKPT");
  std::uint32_t u[4];
  std::memcpy(u, b.data() + 8, 16);
  CHECK(u[0] == 1);
  CHECK(u[1] == 2);
  double v0 = 0.0;
  std::memcpy(&v0, b.data() + 24, 8);
  CHECK(v0 == 3.5);
  // magic, 4 tags, 5 barrier values, count, dims, payload
  CHECK(b.size() == 8 + 16 + 40 + 4 + 16 + 16);
  const auto back = qtnn::read_checkpoint(dir / "c");
  CHECK(back.arch == c.arch);
  CHECK(back.act == c.act);
  CHECK(back.tensors == c.tensors);
}

TEST_CASE("every architecture round-trips") {
  const auto dir = oracle::temp_dir("ckpt_models");
  const auto f = qtnn::FnnModel::init(7, 5, 3, odd_qt(), 1);
  qtnn::save_model(dir / "f", f);
  const auto f2 = qtnn::load_fnn(dir / "f");
  CHECK(f2.w1 == f.w1);
  CHECK(f2.b2 == f.b2);
  CHECK(f2.hidden_act == f.hidden_act);

  const auto r = qtnn::RnnModel::init(9, 4, 3, 2, ActivationKind::tanh(), 2);
  qtnn::save_model(dir / "r", r);
  const auto r2 = qtnn::load_rnn(dir / "r");
  CHECK(r2.embed == r.embed);
  CHECK(r2.wh == r.wh);
  CHECK(r2.hidden_act == r.hidden_act);
  const auto oh = qtnn::RnnModel::init(9, 0, 3, 2, ActivationKind::tanh(), 2);
  qtnn::save_model(dir / "oh", oh);
  CHECK(qtnn::load_rnn(dir / "oh").one_hot());

  const auto b = qtnn::BnnModel::init(6, 4, 3, ActivationKind::relu(), 3, 0.07, 13);
  qtnn::save_model(dir / "b", b);
  const auto b2 = qtnn::load_bnn(dir / "b");
  CHECK(b2.w1_std == b.w1_std);
  CHECK(b2.w2_mean == b.w2_mean);
  CHECK(b2.n_samples == 13);

  auto e = qtnn::esn_build(20, 1, 1, 0.8, 0.3, 4, odd_qt());
  e.washout = 7;
  e.ridge_lambda = 1e-5;
  e.w_out = qtnn::Matrix(1, 22, 0.25);
  qtnn::save_model(dir / "e", e);
  const auto e2 = qtnn::load_esn(dir / "e");
  CHECK(e2.w_res == e.w_res);
  CHECK(e2.w_out == e.w_out);
  CHECK(e2.washout == 7);
  CHECK(e2.ridge_lambda == 1e-5);
  CHECK(e2.rho_target == 0.8);
  CHECK(e2.act == e.act);

  CHECK_THROWS_AS(qtnn::load_rnn(dir / "f"), qtnn::FormatError);
}

TEST_CASE("corrupted files are rejected") {
  const auto dir = oracle::temp_dir("ckpt_bad");
  qtnn::save_model(dir / "f", qtnn::FnnModel::init(3, 2, 2, ActivationKind::relu(), 1));
  const std::string good = slurp(dir / "f");

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  spit(dir / "magic", bad_magic);
  CHECK_THROWS_AS(qtnn::read_checkpoint(dir / "magic"), qtnn::FormatError);

  std::string bad_version = good;
  bad_version[8] = 9;
  spit(dir / "version", bad_version);
  CHECK_THROWS_AS(qtnn::read_checkpoint(dir / "version"), qtnn::FormatError);

  std::string bad_tag = good;
  bad_tag[16] = 42;
  spit(dir / "tag", bad_tag);
  CHECK_THROWS_AS(qtnn::read_checkpoint(dir / "tag"), qtnn::FormatError);

  spit(dir / "short", good.substr(0, good.size() - 5));
  try {
    qtnn::read_checkpoint(dir / "short");
    FAIL("expected a format error");
  } catch (const qtnn::FormatError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  spit(dir / "long", good + "xx");
  CHECK_THROWS_AS(qtnn::read_checkpoint(dir / "long"), qtnn::FormatError);

  CHECK_THROWS_AS(qtnn::read_checkpoint(dir / "absent"), qtnn::IoError);
}

}  // TEST_SUITE
