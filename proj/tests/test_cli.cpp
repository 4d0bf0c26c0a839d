#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "qtnn/data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const fs::path& scratch() {
  static const fs::path dir = oracle::temp_dir("cli");
  return dir;
}

Result run(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const auto err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + QTNN_CLI_PATH + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Small random image sets in the standard layout under <root>/{mnist,fashion}.
const fs::path& synthetic_data() {
  static const fs::path root = [] {
    const auto dir = oracle::temp_dir("cli_data");
    std::mt19937_64 gen(1);
    for (const char* sub : {"mnist", "fashion"}) {
      fs::create_directories(dir / sub);
      for (auto [split, n] : {std::pair{"train", 120}, std::pair{"t10k", 40}}) {
        qtnn::LabeledDataset d;
        d.inputs = qtnn::Matrix(static_cast<std::size_t>(n), 16);
        d.labels_onehot = qtnn::Matrix(static_cast<std::size_t>(n), 10);
        d.image_rows = d.image_cols = 4;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const std::size_t label = gen() % 10;
          d.labels_onehot(i, label) = 1.0;
          for (std::size_t k = 0; k < 16; ++k)
            d.inputs(i, k) = (k == label ? 200.0 : static_cast<double>(gen() % 60)) / 255.0;
        }
        qtnn::write_idx(d, dir / sub / (std::string(split) + "-images-idx3-ubyte"),
                        dir / sub / (std::string(split) + "-labels-idx1-ubyte"));
      }
    }
    return dir;
  }();
  return root;
}

std::string data_flag() { return " --data-dir \"" + synthetic_data().string() + "\""; }

json report_without_clock(const fs::path& p) {
  json j = json::parse(slurp(p));
  j.erase("wall_clock_seconds");
  return j;
}

std::string drop_clock_line(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);)
    if (line.find("wall_clock_seconds") == std::string::npos) out += line + "\n";
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("activation curve export") {
  const auto csv = scratch() / "curve.csv";
  const auto r = run("activation --v0 2 --a 1 --emax 10 --points 11 --out \"" + csv.string() + "\"");
  CHECK(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("E,T,dT_dE\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 12);
}

TEST_CASE("spectrum report lists the second and third harmonics") {
  const auto rep = scratch() / "spectrum.json";
  const auto r = run("spectrum --fn qt --f0 16 --fs 1024 --n 1024 --report \"" + rep.string() + "\"");
  REQUIRE(r.code == 0);
  const auto j = json::parse(slurp(rep));
  std::vector<double> freqs;
  for (const auto& peak : j["result"]["detected"]) freqs.push_back(peak["freq_hz"].get<double>());
  CHECK(std::find(freqs.begin(), freqs.end(), 32.0) != freqs.end());
  CHECK(std::find(freqs.begin(), freqs.end(), 48.0) != freqs.end());
}

TEST_CASE("malformed input exits with 1 for every subcommand") {
  for (const char* cmd : {"activation", "spectrum", "train fnn", "train rnn", "train bnn", "esn",
                          "wavepacket", "mackey-glass"}) {
    CAPTURE(cmd);
    const auto r = run(std::string(cmd) + " --no-such-flag");
    CHECK(r.code == 1);
    CHECK(r.err.find("--no-such-flag") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
  CHECK(run("activation --points many").code == 1);
  CHECK(run("activation --emin 5 --emax 1").code == 1);
  CHECK(run("spectrum --n 1000").code == 1);
  CHECK(run("train fnn --activation swish" + data_flag()).code == 1);
  CHECK(run("train rnn --epochs 0").code == 1);
  CHECK(run("train bnn --samples 0" + data_flag()).code == 1);
  CHECK(run("esn --rho 1.5").code == 1);
  CHECK(run("wavepacket --scenario triple").code == 1);
  CHECK(run("mackey-glass --samples 0").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("").code == 1);
}

TEST_CASE("numerical and IO failures exit with 2") {
  CHECK(run("train fnn --activation relu --lr 1e300 --clip 0 --epochs 3 --hidden 4" + data_flag()).code == 2);
  CHECK(run("train fnn --data-dir /nonexistent_qtnn_data").code == 2);
  CHECK(run("mackey-glass --samples 10 --report /nonexistent_qtnn_dir/r.json").code == 2);
  // tiny reservoir with almost no ridge runs away in closed loop
  const auto r = run("esn --reservoir 20 --train 300 --horizon 500 --washout 50");
  CHECK(r.code == 2);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("help lists every flag with its default") {
  const auto r = run("train fnn --help");
  CHECK(r.code == 0);
  for (const char* flag : {"--activation", "--hidden", "--lr", "--batch", "--clip", "--epochs",
                           "--seed", "--config", "--report", "--v0", "--ampl", "--mode"}) {
    CAPTURE(flag);
    CHECK(r.out.find(flag) != std::string::npos);
  }
  CHECK(r.out.find("512") != std::string::npos);
  CHECK(r.out.find("0.01") != std::string::npos);
  const auto w = run("wavepacket --help");
  CHECK(w.out.find("15.625") != std::string::npos);
  CHECK(run("esn --help").out.find("1e-08") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  const auto cfg = scratch() / "cfg.json";
  std::ofstream(cfg) << R"({"_comment": "test", "hidden": 6, "epochs": 3, "train_limit": 50, "lr": 0.05})";
  const auto rep = scratch() / "cfg_report.json";
  const auto r = run("train fnn --config \"" + cfg.string() + "\" --epochs 1" + data_flag() +
                     " --report \"" + rep.string() + "\"");
  REQUIRE(r.code == 0);
  const auto j = json::parse(slurp(rep));
  CHECK(j["config"]["hidden"] == 6);
  CHECK(j["config"]["epochs"] == 1);
  CHECK(j["config"]["train-limit"] == 50);
  CHECK(j["config"]["lr"] == 0.05);
  CHECK(j["seed"] == 42);
  CHECK(run("train fnn --config /nonexistent_qtnn.json").code == 1);
}

TEST_CASE("reruns with the same seed reproduce their reports") {
  const std::string d = data_flag();
  const std::vector<std::string> commands = {
      "activation --points 50 --out -",
      "spectrum --fn sigmoid",
      "train fnn --hidden 8 --epochs 2 --seed 3" + d,
      "train rnn --epochs 5 --hidden 8 --seed 3 --holdout",
      "train bnn --hidden 8 --epochs 2 --train-limit 60 --test-limit 20 --samples 5 --seed 3" + d,
      "esn --reservoir 60 --train 600 --horizon 500 --washout 50 --seed 3",
      "esn --activation qt --reservoir 60 --train 600 --horizon 500 --washout 50 --seed 3",
      "wavepacket --nx 120 --ny 120 --x0 3 --sigma 0.5 --barrier-x 8 --steps 20 --snapshot-every 10 "
      "--format text --out-dir \"" + (scratch() / "wp").string() + "\"",
      "mackey-glass --samples 100 --out -"};
  for (const auto& cmd : commands) {
    CAPTURE(cmd);
    const auto rep = scratch() / "det.json";
    const auto a = run(cmd + " --report \"" + rep.string() + "\"");
    REQUIRE(a.code == 0);
    const std::string first = drop_clock_line(slurp(rep));
    const json first_json = report_without_clock(rep);
    const auto b = run(cmd + " --report \"" + rep.string() + "\"");
    REQUIRE(b.code == 0);
    CHECK(drop_clock_line(slurp(rep)) == first);
    CHECK(report_without_clock(rep) == first_json);
    CHECK(a.out == b.out);
    CHECK(first_json.contains("command"));
    CHECK(first_json.contains("config"));
  }
}

TEST_CASE("report goes to stdout when no path is given") {
  const auto r = run("esn --reservoir 50 --lambda 1e-4 --train 300 --horizon 500 --washout 50");
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["command"].is_array());
  CHECK(j.contains("wall_clock_seconds"));
}

}  // TEST_SUITE
