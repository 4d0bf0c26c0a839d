#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qtnn/data.hpp"
#include "qtnn/errors.hpp"

namespace fs = std::filesystem;

namespace {

qtnn::LabeledDataset tiny_images() {
  qtnn::LabeledDataset d;
  d.inputs = qtnn::Matrix(2, 6);
  const unsigned char px[12] = {0, 255, 17, 128, 3, 90, 200, 1, 0, 0, 64, 255};
  for (std::size_t i = 0; i < 12; ++i) d.inputs.values()[i] = px[i] / 255.0;
  d.labels_onehot = qtnn::Matrix(2, 10);
  d.labels_onehot(0, 7) = 1.0;
  d.labels_onehot(1, 2) = 1.0;
  d.class_names = qtnn::digit_class_names();
  d.image_rows = 2;
  d.image_cols = 3;
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

// RK4 at a fine step with the delayed value at half steps linearly interpolated.
std::vector<double> mg_oracle(double dt, std::size_t per_sample, std::size_t transient,
                              std::size_t n) {
  const auto delay = static_cast<std::size_t>(std::llround(17.0 / dt));
  std::vector<double> hist(delay + 1, 1.2);  // hist[k] = x at time (k − delay)·dt
  std::vector<double> out;
  auto f = [](double x, double xd) { return 0.2 * xd / (1.0 + std::pow(xd, 10.0)) - 0.1 * x; };
  std::size_t samples = 0;
  for (std::size_t step = 0; out.size() < n; ++step) {
    const double x = hist.back();
    const double d0 = hist[hist.size() - 1 - delay];
    const double d1 = hist[hist.size() - delay];
    const double dm = 0.5 * (d0 + d1);
    const double k1 = f(x, d0);
    const double k2 = f(x + 0.5 * dt * k1, dm);
    const double k3 = f(x + 0.5 * dt * k2, dm);
    const double k4 = f(x + dt * k3, d1);
    hist.push_back(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    if (hist.size() > 4 * (delay + 1)) hist.erase(hist.begin(), hist.end() - static_cast<long>(delay + 1));
    if ((step + 1) % per_sample == 0 && ++samples > transient) out.push_back(hist.back());
  }
  return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("idx files round-trip exactly") {
  const auto dir = oracle::temp_dir("idx_roundtrip");
  const auto d = tiny_images();
  qtnn::write_idx(d, dir / "img", dir / "lab");
  const auto back = qtnn::load_idx(dir / "img", dir / "lab");
  CHECK(back.inputs == d.inputs);
  CHECK(back.labels_onehot == d.labels_onehot);
  CHECK(back.image_rows == 2);
  CHECK(back.image_cols == 3);
  CHECK(back.labels() == std::vector<std::size_t>{7, 2});

  qtnn::write_idx(back, dir / "img2", dir / "lab2");
  CHECK(slurp(dir / "img") == slurp(dir / "img2"));
  CHECK(slurp(dir / "lab") == slurp(dir / "lab2"));
}

TEST_CASE("idx header written by hand parses") {
  const auto dir = oracle::temp_dir("idx_manual");
  std::string img = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2};
  img += std::string{char(0), char(255), char(51), char(102)};
  std::string lab = {0, 0, 8, 1, 0, 0, 0, 1, 3};
  spit(dir / "i", img);
  spit(dir / "l", lab);
  const auto d = qtnn::load_idx(dir / "i", dir / "l");
  REQUIRE(d.size() == 1);
  CHECK(d.inputs(0, 1) == 1.0);
  CHECK(d.inputs(0, 2) == 0.2);
  CHECK(d.labels() == std::vector<std::size_t>{3});
}

TEST_CASE("malformed idx files raise format errors") {
  const auto dir = oracle::temp_dir("idx_bad");
  qtnn::write_idx(tiny_images(), dir / "img", dir / "lab");
  const std::string img = slurp(dir / "img");
  const std::string lab = slurp(dir / "lab");

  spit(dir / "zero_magic", std::string(4, '\0') + img.substr(4));
  CHECK_THROWS_AS(qtnn::load_idx(dir / "zero_magic", dir / "lab"), qtnn::FormatError);

  spit(dir / "short", img.substr(0, img.size() - 3));
  try {
    qtnn::load_idx(dir / "short", dir / "lab");
    FAIL("expected a format error");
  } catch (const qtnn::FormatError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }

  std::string three = lab;
  three[7] = 3;
  three += '\1';
  spit(dir / "count", three);
  CHECK_THROWS_AS(qtnn::load_idx(dir / "img", dir / "count"), qtnn::FormatError);

  std::string big_label = lab;
  big_label.back() = 12;
  spit(dir / "label12", big_label);
  CHECK_THROWS_AS(qtnn::load_idx(dir / "img", dir / "label12"), qtnn::FormatError);

  CHECK_THROWS_AS(qtnn::load_idx(dir / "missing", dir / "lab"), qtnn::IoError);
}

TEST_CASE("official MNIST training files") {
  const auto root = qtnn::data_dir();
  if (!fs::exists(root / "mnist" / "train-images-idx3-ubyte")) {
    MESSAGE("MNIST not found under " << root.string() << "; skipped");
    return;
  }
  const auto d = qtnn::load_idx_split(root, "mnist", "train", qtnn::digit_class_names());
  CHECK(d.size() == 60000);
  CHECK(d.inputs.cols() == 784);
  CHECK(d.num_classes() == 10);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("dataset validation catches broken invariants") {
  auto d = tiny_images();
  CHECK_NOTHROW(d.validate());
  d.labels_onehot(0, 3) = 1.0;
  CHECK_THROWS_AS(d.validate(), qtnn::FormatError);
  d = tiny_images();
  d.inputs(0, 0) = 1.5;
  CHECK_THROWS_AS(d.validate(), qtnn::FormatError);
  const auto s = tiny_images().slice(1, 1);
  CHECK(s.labels() == std::vector<std::size_t>{2});
}

TEST_CASE("sentiment encoding follows first appearance") {
  std::istringstream in("text,label\ngood movie,1\nbad movie,0\n");
  const auto c = qtnn::parse_sentiment(in);
  REQUIRE(c.size() == 2);
  CHECK(c.vocab == std::vector<std::string>{"<pad>", "good", "movie", "bad"});
  CHECK(c.phrases[0] == std::vector<std::size_t>{1, 2});
  CHECK(c.phrases[1] == std::vector<std::size_t>{3, 2});
  CHECK(c.labels == std::vector<int>{1, 0});
}

TEST_CASE("sentiment parsing handles case and quotes") {
  std::istringstream in("text,label\n\"Hello, World\",1\nworld  AGAIN,0\n");
  const auto c = qtnn::parse_sentiment(in);
  CHECK(c.vocab == std::vector<std::string>{"<pad>", "hello,", "world", "again"});
  CHECK(c.phrases[1] == std::vector<std::size_t>{2, 3});
}

TEST_CASE("malformed sentiment rows report their line") {
  std::istringstream empty("text,label\ngood,1\n,0\n");
  try {
    qtnn::parse_sentiment(empty, "x.csv");
    FAIL("expected a format error");
  } catch (const qtnn::FormatError& e) {
    CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
  }
  std::istringstream label("text,label\ngood,2\n");
  CHECK_THROWS_AS(qtnn::parse_sentiment(label), qtnn::FormatError);
  std::istringstream header("good,1\n");
  CHECK_THROWS_AS(qtnn::parse_sentiment(header), qtnn::FormatError);
}

TEST_CASE("bundled corpus shape and vocabulary") {
  const auto path = qtnn::bundled_sentiment_path();
  const auto c = qtnn::load_sentiment(path);
  CHECK(c.size() == 48);
  CHECK(std::count(c.labels.begin(), c.labels.end(), 1) == 24);

  // Count distinct tokens straight from the file.
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::set<std::string> tokens;
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    std::istringstream words(line.substr(0, comma));
    for (std::string w; words >> w;) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return std::tolower(ch); });
      tokens.insert(w);
    }
  }
  CHECK(c.vocab_size() == tokens.size() + 1);

  const auto again = qtnn::load_sentiment(path);
  CHECK(again.vocab == c.vocab);
  CHECK(again.phrases == c.phrases);
}

TEST_CASE("sentiment split is stratified 75/25") {
  const auto c = qtnn::load_sentiment(qtnn::bundled_sentiment_path());
  const auto [train, test] = qtnn::split_sentiment(c);
  CHECK(train.size() == 36);
  CHECK(test.size() == 12);
  CHECK(std::count(test.labels.begin(), test.labels.end(), 1) == 6);
  CHECK(train.vocab == c.vocab);
}

TEST_CASE("Mackey-Glass equilibrium history stays put") {
  qtnn::MgConfig cfg;
  cfg.x0 = 1.0;
  const auto s = qtnn::mackey_glass_raw(cfg, 300);
  for (double v : s) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Mackey-Glass default series range agrees with a fine-step oracle") {
  const auto s = qtnn::mackey_glass_raw({}, 4000);
  REQUIRE(s.size() == 4000);
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  CHECK(*lo > 0.2);
  CHECK(*hi < 1.5);

  const auto ref = mg_oracle(0.01, 100, 1000, 4000);
  const auto [rlo, rhi] = std::minmax_element(ref.begin(), ref.end());
  CHECK(*rlo > 0.2);
  CHECK(*rhi < 1.5);
  CHECK(std::abs(*lo - *rlo) < 0.05);
  CHECK(std::abs(*hi - *rhi) < 0.05);
  // Early samples are still close before chaotic divergence sets in.
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(s[i] - ref[i]) < 1e-3);
}

TEST_CASE("Mackey-Glass is step-size convergent") {
  qtnn::MgConfig fine;
  fine.dt = 0.05;
  fine.sample_every = 20;
  const auto a = qtnn::mackey_glass_raw({}, 500);
  const auto b = qtnn::mackey_glass_raw(fine, 500);
  double worst = 0.0;
  for (std::size_t i = 0; i < 500; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  CHECK(worst < 1e-3);
  CHECK(qtnn::mackey_glass_raw({}, 500) == a);
}

TEST_CASE("Mackey-Glass normalization and configuration checks") {
  const auto s = qtnn::mackey_glass({}, 1000);
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  CHECK(*lo == 0.0);
  CHECK(*hi == 1.0);
  qtnn::MgConfig bad;
  bad.dt = 0.3;
  CHECK_THROWS_AS(qtnn::mackey_glass({}, 0), qtnn::InputError);
  CHECK_THROWS_AS(bad.validate(), qtnn::ConfigError);

  const auto dir = oracle::temp_dir("mg_csv");
  qtnn::write_series_csv(dir / "s.csv", std::vector<double>{0.5, 0.25});
  CHECK(slurp(dir / "s.csv").rfind("t,x\n0,0.5", 0) == 0);
}

}  // TEST_SUITE
