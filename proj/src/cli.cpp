#include "qtnn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qtnn/activation.hpp"
#include "qtnn/bnn.hpp"
#include "qtnn/checkpoint.hpp"
#include "qtnn/data.hpp"
#include "qtnn/errors.hpp"
#include "qtnn/esn.hpp"
#include "qtnn/fnn.hpp"
#include "qtnn/report.hpp"
#include "qtnn/rnn.hpp"
#include "qtnn/wavepacket.hpp"

namespace qtnn::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 42;
  std::string report;
};

struct Barrier {
  BarrierParams p;
  std::string mode = "rectified";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file of option values; flags given here override it");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--report", c.report, "Report JSON path (empty: print to stdout)");
}

void add_barrier(CLI::App* sub, Barrier& b) {
  sub->add_option("--v0", b.p.v0, "Barrier height");
  sub->add_option("--a", b.p.a, "Barrier width");
  sub->add_option("--m", b.p.m, "Particle mass");
  sub->add_option("--hbar", b.p.hbar, "Reduced Planck constant");
  sub->add_option("--ampl", b.p.ampl, "Input-to-energy scale");
  sub->add_option("--mode", b.mode, "QT output mode: rectified, absolute, bipolar");
}

ActivationKind make_activation(const std::string& name, const Barrier& b) {
  BarrierParams p = b.p;
  p.mode = parse_qt_mode(b.mode);
  return parse_activation(name, p);
}

// Turns an option's string form into a typed JSON value.
json typed_value(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  if (!s.empty()) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end && *end == '\0' && std::isfinite(d)) {
      if (s.find_first_of(".eE") == std::string::npos) {
        if (s[0] == '-') return std::strtoll(s.c_str(), nullptr, 10);
        return std::strtoull(s.c_str(), nullptr, 10);
      }
      return d;
    }
  }
  return s;
}

// Effective value of every option on `sub`, keyed by long name.
json resolved_config(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "report" || name.empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->as<std::string>();
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_type_size() == 0 && value.empty()) value = "false";
    cfg[name] = typed_value(value);
  }
  return cfg;
}

json base_report(const std::vector<std::string>& args, const CLI::App* sub, const Common& c) {
  return {{"command", args}, {"config", resolved_config(sub)}, {"seed", c.seed}};
}

void emit_report(json report, const Common& c, Clock::time_point start) {
  report["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  if (c.report.empty()) {
    std::cout << canonical_json(report);
  } else {
    write_report(report, c.report);
  }
}


void log_epoch(const EpochMetrics& m, bool has_test) {
  if (has_test && std::isfinite(m.test_accuracy)) {
    std::fprintf(stderr, "epoch %zu  train loss %.6f acc %.4f  test loss %.6f acc %.4f\n", m.epoch,
                 m.train_loss, m.train_accuracy, m.test_loss, m.test_accuracy);
  } else {
    std::fprintf(stderr, "epoch %zu  train loss %.6f acc %.4f\n", m.epoch, m.train_loss,
                 m.train_accuracy);
  }
}

std::vector<std::string> class_names_for(const std::string& dataset) {
  if (dataset == "mnist") return digit_class_names();
  if (dataset == "fashion") return fashion_class_names();
  throw ConfigError("unknown dataset '" + dataset + "' (mnist, fashion)");
}

LabeledDataset load_split(const std::string& dataset, const std::string& dir,
                          const std::string& split, std::size_t limit) {
  const std::filesystem::path root = dir.empty() ? data_dir() : std::filesystem::path(dir);
  LabeledDataset d = load_idx_split(root, dataset, split, class_names_for(dataset));
  if (limit > 0 && limit < d.size()) d = d.slice(0, limit);
  return d;
}

std::optional<double> clip_option(double clip) {
  if (clip > 0.0) return clip;
  return std::nullopt;
}

// ---------------------------------------------------------------- commands

struct ActivationCmd {
  Common c;
  Barrier b;
  double emin = 0.0, emax = 10.0;
  std::size_t points = 1001;
  std::string out = "-";
};

int run_activation(const ActivationCmd& o, const CLI::App* sub,
                   const std::vector<std::string>& args) {
  const auto start = Clock::now();
  BarrierParams p = o.b.p;
  p.mode = parse_qt_mode(o.b.mode);
  p.validate();
  if (!(o.emin >= 0.0) || !(o.emax > o.emin)) throw ConfigError("need 0 <= emin < emax");
  if (o.points < 2) throw ConfigError("need at least 2 points");
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (o.out != "-") {
    file.open(o.out);
    if (!file) throw IoError("cannot open " + o.out + " for writing");
    os = &file;
  }
  *os << "E,T,dT_dE\n";
  char buf[96];
  for (std::size_t i = 0; i < o.points; ++i) {
    const double e = o.emin + (o.emax - o.emin) * static_cast<double>(i) /
                                  static_cast<double>(o.points - 1);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", e, qt_transmission(e, p),
                  qt_transmission_derivative(e, p));
    *os << buf;
  }
  if (!*os) throw IoError("write failed for " + o.out);
  if (!o.c.report.empty()) {
    json r = base_report(args, sub, o.c);
    r["artifacts"] = {{"curve", o.out}};
    emit_report(r, o.c, start);
  }
  return 0;
}

struct SpectrumCmd {
  Common c;
  Barrier b;
  std::string fn = "qt";
  double f0 = 16.0, fs = 1024.0, threshold_db = kHarmonicThresholdDb;
  std::size_t n = 1024;
  std::string csv;
};

int run_spectrum(const SpectrumCmd& o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const auto rep = harmonic_spectrum(make_activation(o.fn, o.b), o.f0, o.fs, o.n, o.threshold_db);
  if (!o.csv.empty()) write_spectrum_csv(rep, o.csv);
  json r = base_report(args, sub, o.c);
  r["result"] = json::parse(harmonic_report_json(rep));
  if (!o.csv.empty()) r["artifacts"] = {{"spectrum_csv", o.csv}};
  for (const auto& h : rep.detected) {
    std::fprintf(stderr, "harmonic k=%d  %.6g Hz  %.2f dB\n", h.k, h.freq_hz, h.rel_db);
  }
  emit_report(r, o.c, start);
  return 0;
}

struct FnnCmd {
  Common c;
  Barrier b;
  std::string activation = "qt", dataset = "mnist", data_dir, checkpoint;
  std::size_t hidden = 512, batch = 64, epochs = 10, train_limit = 0, test_limit = 0;
  double lr = 0.01, clip = 5.0;
};

int run_fnn(const FnnCmd& o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const auto act = make_activation(o.activation, o.b);
  TrainConfig cfg{o.lr, o.epochs, o.batch, clip_option(o.clip), o.c.seed};
  cfg.validate();
  const auto train = load_split(o.dataset, o.data_dir, "train", o.train_limit);
  const auto test = load_split(o.dataset, o.data_dir, "t10k", o.test_limit);
  FnnModel model = FnnModel::init(train.inputs.cols(), o.hidden, train.num_classes(), act, o.c.seed);
  const auto trace = fnn_train(model, train, cfg, &test,
                               [](const EpochMetrics& m) { log_epoch(m, true); });
  json r = base_report(args, sub, o.c);
  r["activation"] = act.name();
  r["epochs"] = trace.to_json();
  const auto& last = trace.epochs.back();
  r["final"] = {{"train_accuracy", last.train_accuracy}, {"train_loss", last.train_loss},
                {"test_accuracy", last.test_accuracy},   {"test_loss", last.test_loss}};
  r["data"] = {{"train_size", train.size()}, {"test_size", test.size()}};
  if (!o.checkpoint.empty()) {
    save_model(o.checkpoint, model);
    r["artifacts"] = {{"checkpoint", o.checkpoint}};
  }
  emit_report(r, o.c, start);
  return 0;
}

struct RnnCmd {
  Common c;
  Barrier b;
  std::string activation = "qt", corpus, checkpoint;
  std::size_t hidden = 32, embed = 16, epochs = 1000;
  double lr = 0.05, clip = 5.0;
  bool holdout = false;
};

int run_rnn(const RnnCmd& o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const auto act = make_activation(o.activation, o.b);
  TrainConfig cfg{o.lr, o.epochs, 1, clip_option(o.clip), o.c.seed};
  cfg.validate();
  const auto corpus = load_sentiment(o.corpus.empty() ? bundled_sentiment_path() : std::filesystem::path(o.corpus));
  SentimentCorpus train = corpus, test;
  if (o.holdout) std::tie(train, test) = split_sentiment(corpus);
  RnnModel model = RnnModel::init(corpus.vocab_size(), o.embed, o.hidden, 2, act, o.c.seed);
  const auto trace = rnn_train(model, train, cfg, o.holdout ? &test : nullptr,
                               [&](const EpochMetrics& m) {
                                 if (m.epoch % 50 == 0 || m.epoch == 1) log_epoch(m, o.holdout);
                               });
  json r = base_report(args, sub, o.c);
  r["activation"] = act.name();
  r["epochs"] = trace.to_json();
  json first_perfect = nullptr, first_low_loss = nullptr;
  for (const auto& m : trace.epochs) {
    if (first_perfect.is_null() && m.train_accuracy == 1.0) first_perfect = m.epoch;
    if (first_low_loss.is_null() && m.train_accuracy == 1.0 && m.train_loss < 0.01) {
      first_low_loss = m.epoch;
    }
  }
  const auto& last = trace.epochs.back();
  r["final"] = {{"train_accuracy", last.train_accuracy},
                {"train_loss", last.train_loss},
                {"epochs_to_full_accuracy", first_perfect},
                {"epochs_to_loss_below_0.01", first_low_loss}};
  if (o.holdout) {
    r["final"]["test_accuracy"] = last.test_accuracy;
    r["final"]["test_loss"] = last.test_loss;
  }
  r["data"] = json{{"train_size", train.size()},
                   {"test_size", test.size()},
                   {"vocab_size", corpus.vocab_size()}};
  if (!o.checkpoint.empty()) {
    save_model(o.checkpoint, model);
    r["artifacts"] = {{"checkpoint", o.checkpoint}};
  }
  emit_report(r, o.c, start);
  return 0;
}

struct BnnCmd {
  Common c;
  Barrier b;
  std::string activation = "qt", dataset = "fashion", data_dir, checkpoint;
  std::size_t hidden = 512, batch = 1, epochs = 30, train_limit = 10000, test_limit = 2000;
  std::size_t samples = 50, eval_every = 0;
  double lr = 0.5, clip = 5.0, init_std = 0.01;
};

int run_bnn(const BnnCmd& o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const auto act = make_activation(o.activation, o.b);
  TrainConfig cfg{o.lr, o.epochs, o.batch, clip_option(o.clip), o.c.seed};
  cfg.validate();
  const auto train = load_split(o.dataset, o.data_dir, "train", o.train_limit);
  const auto test = load_split(o.dataset, o.data_dir, "t10k", o.test_limit);
  BnnModel model = BnnModel::init(train.inputs.cols(), o.hidden, train.num_classes(), act,
                                  o.c.seed, o.init_std, o.samples);
  const auto trace = bnn_train(model, train, cfg, &test,
                               [](const EpochMetrics& m) { log_epoch(m, true); },
                               BnnTrainOptions{o.eval_every});
  Rng rng = Rng::substream(o.c.seed, kNoiseStream + 2);
  const auto pred = bnn_predict_with_uncertainty(model, test.inputs, rng);
  json mean_p = json::array(), mean_sd = json::array();
  for (std::size_t k = 0; k < pred.mean.cols(); ++k) {
    double sp = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < pred.mean.rows(); ++i) {
      sp += pred.mean(i, k);
      ss += pred.stddev(i, k);
    }
    mean_p.push_back(sp / static_cast<double>(pred.mean.rows()));
    mean_sd.push_back(ss / static_cast<double>(pred.mean.rows()));
  }
  json r = base_report(args, sub, o.c);
  r["activation"] = act.name();
  r["epochs"] = trace.to_json();
  const auto& last = trace.epochs.back();
  r["final"] = {{"train_accuracy", last.train_accuracy},
                {"train_loss", last.train_loss},
                {"test_accuracy", last.test_accuracy},
                {"test_loss", last.test_loss},
                {"prediction_accuracy", accuracy(pred.mean, test.labels_onehot)}};
  r["prediction"] = {{"class_names", test.class_names},
                     {"mean_probability", mean_p},
                     {"mean_stddev", mean_sd}};
  r["data"] = {{"train_size", train.size()}, {"test_size", test.size()}};
  if (!o.checkpoint.empty()) {
    save_model(o.checkpoint, model);
    r["artifacts"] = {{"checkpoint", o.checkpoint}};
  }
  emit_report(r, o.c, start);
  return 0;
}

struct EsnCmd {
  Common c;
  Barrier b;
  std::string activation = "tanh", forecast, checkpoint;
  std::size_t reservoir = 1000, washout = 100, train = 2000, horizon = 2000;
  double rho = 0.95, density = 0.1, lambda = 1e-8;
  bool allow_unstable_rho = false;
  MgConfig mg;
};

int run_esn(EsnCmd o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  // QT in a reservoir defaults to the sign-symmetric output unless a mode was given.
  // Config-file values arrive as flags, so count() covers both sources.
  if (o.activation == "qt" && sub->get_option("--mode")->count() == 0) o.b.mode = "bipolar";
  const auto act = make_activation(o.activation, o.b);
  if (o.horizon < 500) throw ConfigError("horizon must be at least 500 steps");
  const auto series = mackey_glass(o.mg, o.train + o.horizon);
  const std::span<const double> train_part(series.data(), o.train);
  const std::span<const double> target(series.data() + o.train, o.horizon);

  EsnModel model = esn_build(o.reservoir, 1, 1, o.rho, o.density, o.c.seed, act,
                             EsnBuildOptions{o.allow_unstable_rho});
  model.washout = o.washout;
  model.ridge_lambda = o.lambda;
  esn_fit(model, train_part);
  const auto pred = esn_free_run(model, train_part, o.horizon);
  const std::span<const double> p(pred);

  json r = base_report(args, sub, o.c);
  r["config"]["mode"] = to_string(act.barrier.mode);
  r["act"] = act.name();
  r["mode"] = act.tag == ActivationTag::qt ? to_string(act.barrier.mode) : "none";
  r["rho"] = o.rho;
  r["lambda"] = o.lambda;
  r["rho_estimate"] = spectral_radius(model.w_res);
  r["mse_500"] = mse_metric(p.first(500), target.first(500));
  r["mse_2000"] = mse_metric(p, target);
  r["nmse_500"] = nmse_metric(p.first(500), target.first(500));
  r["nmse_2000"] = nmse_metric(p, target);
  json artifacts = json::object();
  if (!o.forecast.empty()) {
    write_forecast_csv(o.forecast, target, p);
    artifacts["forecast"] = o.forecast;
  }
  if (!o.checkpoint.empty()) {
    save_model(o.checkpoint, model);
    artifacts["checkpoint"] = o.checkpoint;
  }
  if (!artifacts.empty()) r["artifacts"] = artifacts;
  std::fprintf(stderr, "mse_500 %.6g  mse_2000 %.6g\n", r["mse_500"].get<double>(),
               r["mse_2000"].get<double>());
  emit_report(r, o.c, start);
  return 0;
}

struct WavepacketCmd {
  Common c;
  GridSpec grid;
  Scenario s;
  std::string scenario = "barrier", format = "pgm", stencil = "compact", out_dir;
  std::size_t steps = 600, snapshot_every = 200;
};

int run_wavepacket(WavepacketCmd o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  o.s.kind = parse_scenario_kind(o.scenario);
  o.grid.stencil = parse_stencil(o.stencil);
  const auto format = parse_frame_format(o.format);
  const auto run = wp_run(o.grid, o.s, o.steps, o.snapshot_every);
  json r = base_report(args, sub, o.c);
  r["summary"] = run.summary.to_json();
  if (!o.out_dir.empty()) {
    export_frames(run, o.grid, o.s, o.out_dir, format);
    r["artifacts"] = {{"frames_dir", o.out_dir},
                      {"manifest", (std::filesystem::path(o.out_dir) / "manifest.json").string()}};
  }
  std::fprintf(stderr, "reflected %.6f  transmitted %.6f  residual %.6f\n", run.summary.reflected,
               run.summary.transmitted, run.summary.residual);
  emit_report(r, o.c, start);
  return 0;
}

struct MgCmd {
  Common c;
  MgConfig mg;
  std::size_t samples = 4000;
  bool raw = false;
  std::string out = "-";
};

int run_mg(const MgCmd& o, const CLI::App* sub, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const auto series = o.raw ? mackey_glass_raw(o.mg, o.samples) : mackey_glass(o.mg, o.samples);
  if (o.out == "-") {
    std::cout << "t,x\n";
    char buf[64];
    for (std::size_t i = 0; i < series.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, series[i]);
      std::cout << buf;
    }
  } else {
    write_series_csv(o.out, series);
  }
  if (!o.c.report.empty()) {
    json r = base_report(args, sub, o.c);
    r["artifacts"] = {{"series", o.out}};
    emit_report(r, o.c, start);
  }
  return 0;
}

void add_mg(CLI::App* sub, MgConfig& mg) {
  sub->add_option("--mg-beta", mg.beta, "Mackey-Glass production rate");
  sub->add_option("--mg-gamma", mg.gamma, "Mackey-Glass decay rate");
  sub->add_option("--mg-tau", mg.tau, "Mackey-Glass delay");
  sub->add_option("--mg-q", mg.q, "Mackey-Glass exponent");
  sub->add_option("--mg-dt", mg.dt, "Integrator step");
  sub->add_option("--mg-sample-every", mg.sample_every, "Integrator steps per sample");
  sub->add_option("--mg-transient", mg.transient, "Samples discarded before output");
  sub->add_option("--mg-x0", mg.x0, "Constant initial history");
}

// ------------------------------------------------------------ config files

// Flags from the --config file, inserted before the user's own flags so the
// latter win (every option takes the last value given).
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (key.empty() || key[0] == '_') continue;
    std::string flag = "--" + key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_number_float()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", value.get<double>());
      out.push_back(flag);
      out.emplace_back(buf);
    } else if (value.is_number()) {
      out.push_back(flag);
      out.push_back(value.dump());
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else {
      throw ConfigError(path + ": value of '" + key + "' must be a scalar");
    }
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::size_t insert_at = 0;
  while (insert_at < args.size() && !args[insert_at].starts_with("-")) ++insert_at;
  const auto tokens = config_tokens(path);
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(insert_at));
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), args.begin() + static_cast<long>(insert_at), args.end());
  return out;
}

void configure(CLI::App* app) {
  app->option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
}

}  // namespace

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

  CLI::App app{"Neural networks with quantum-tunnelling activations"};
  app.name("qtnn");
  app.require_subcommand(1);
  configure(&app);

  ActivationCmd act_o;
  auto* act = app.add_subcommand("activation", "Transmission curve T(E) and dT/dE as CSV");
  configure(act);
  add_common(act, act_o.c);
  add_barrier(act, act_o.b);
  act->add_option("--emin", act_o.emin, "Lowest energy");
  act->add_option("--emax", act_o.emax, "Highest energy");
  act->add_option("--points", act_o.points, "Number of samples");
  act->add_option("--out", act_o.out, "CSV path ('-' for stdout)");

  SpectrumCmd sp_o;
  auto* sp = app.add_subcommand("spectrum", "Harmonic content of an activation driven by a sine");
  configure(sp);
  add_common(sp, sp_o.c);
  add_barrier(sp, sp_o.b);
  sp->add_option("--fn", sp_o.fn, "Activation: qt, relu, sigmoid, tanh, identity");
  sp->add_option("--f0", sp_o.f0, "Drive frequency in Hz");
  sp->add_option("--fs", sp_o.fs, "Sampling rate in Hz");
  sp->add_option("--n", sp_o.n, "Number of samples (power of two)");
  sp->add_option("--threshold-db", sp_o.threshold_db, "Detection threshold relative to the peak");
  sp->add_option("--csv", sp_o.csv, "Magnitude spectrum CSV path");

  auto* train = app.add_subcommand("train", "Train a classifier");
  configure(train);
  train->require_subcommand(1);

  FnnCmd fnn_o;
  auto* fnn = train->add_subcommand("fnn", "Feedforward network on MNIST or Fashion-MNIST");
  configure(fnn);
  add_common(fnn, fnn_o.c);
  add_barrier(fnn, fnn_o.b);
  fnn->add_option("--activation", fnn_o.activation, "Hidden activation");
  fnn->add_option("--dataset", fnn_o.dataset, "mnist or fashion");
  fnn->add_option("--data-dir", fnn_o.data_dir, "Dataset root (default: $QTNN_DATA_DIR or ./data)");
  fnn->add_option("--hidden", fnn_o.hidden, "Hidden units");
  fnn->add_option("--lr", fnn_o.lr, "Learning rate");
  fnn->add_option("--batch", fnn_o.batch, "Mini-batch size");
  fnn->add_option("--clip", fnn_o.clip, "Global gradient-norm clip (<= 0 disables)");
  fnn->add_option("--epochs", fnn_o.epochs, "Training epochs");
  fnn->add_option("--train-limit", fnn_o.train_limit, "Use only the first N training images (0: all)");
  fnn->add_option("--test-limit", fnn_o.test_limit, "Use only the first N test images (0: all)");
  fnn->add_option("--checkpoint", fnn_o.checkpoint, "Write trained weights here");

  RnnCmd rnn_o;
  auto* rnn = train->add_subcommand("rnn", "Recurrent network on the sentiment corpus");
  configure(rnn);
  add_common(rnn, rnn_o.c);
  add_barrier(rnn, rnn_o.b);
  rnn->add_option("--activation", rnn_o.activation, "Hidden activation");
  rnn->add_option("--corpus", rnn_o.corpus, "text,label CSV (default: bundled corpus)");
  rnn->add_option("--hidden", rnn_o.hidden, "Hidden units");
  rnn->add_option("--embed", rnn_o.embed, "Embedding width (0: one-hot inputs)");
  rnn->add_option("--lr", rnn_o.lr, "Learning rate");
  rnn->add_option("--clip", rnn_o.clip, "Global gradient-norm clip (<= 0 disables)");
  rnn->add_option("--epochs", rnn_o.epochs, "Training epochs");
  rnn->add_flag("--holdout", rnn_o.holdout, "Hold out every fourth phrase per class for testing");
  rnn->add_option("--checkpoint", rnn_o.checkpoint, "Write trained weights here");

  BnnCmd bnn_o;
  auto* bnn = train->add_subcommand("bnn", "Bayesian network with Gaussian weights");
  configure(bnn);
  add_common(bnn, bnn_o.c);
  add_barrier(bnn, bnn_o.b);
  bnn->add_option("--activation", bnn_o.activation, "Hidden activation");
  bnn->add_option("--dataset", bnn_o.dataset, "mnist or fashion");
  bnn->add_option("--data-dir", bnn_o.data_dir, "Dataset root (default: $QTNN_DATA_DIR or ./data)");
  bnn->add_option("--hidden", bnn_o.hidden, "Hidden units");
  bnn->add_option("--lr", bnn_o.lr, "Learning rate");
  bnn->add_option("--batch", bnn_o.batch, "Mini-batch size");
  bnn->add_option("--clip", bnn_o.clip, "Global gradient-norm clip (<= 0 disables)");
  bnn->add_option("--epochs", bnn_o.epochs, "Training epochs");
  bnn->add_option("--train-limit", bnn_o.train_limit, "Use only the first N training images (0: all)");
  bnn->add_option("--test-limit", bnn_o.test_limit, "Use only the first N test images (0: all)");
  bnn->add_option("--samples", bnn_o.samples, "Posterior samples per prediction");
  bnn->add_option("--init-std", bnn_o.init_std, "Weight standard deviation");
  bnn->add_option("--eval-every", bnn_o.eval_every,
                  "Held-out evaluation cadence in epochs (0: final epoch only)");
  bnn->add_option("--checkpoint", bnn_o.checkpoint, "Write trained weights here");

  EsnCmd esn_o;
  auto* esn = app.add_subcommand("esn", "Echo state network forecasting Mackey-Glass");
  configure(esn);
  add_common(esn, esn_o.c);
  add_barrier(esn, esn_o.b);
  esn->add_option("--activation", esn_o.activation, "Reservoir activation (qt defaults to bipolar mode)");
  esn->add_option("--reservoir", esn_o.reservoir, "Reservoir size");
  esn->add_option("--rho", esn_o.rho, "Target spectral radius");
  esn->add_option("--density", esn_o.density, "Fraction of nonzero reservoir weights");
  esn->add_option("--washout", esn_o.washout, "Initial states discarded before fitting");
  esn->add_option("--lambda", esn_o.lambda, "Ridge regularization");
  esn->add_option("--train", esn_o.train, "Training samples");
  esn->add_option("--horizon", esn_o.horizon, "Free-run forecast length");
  esn->add_flag("--allow-unstable-rho", esn_o.allow_unstable_rho, "Permit rho >= 1");
  esn->add_option("--forecast", esn_o.forecast, "t,target,prediction CSV path");
  esn->add_option("--checkpoint", esn_o.checkpoint, "Write the fitted model here");
  add_mg(esn, esn_o.mg);

  WavepacketCmd wp_o;
  auto* wp = app.add_subcommand("wavepacket", "2D Schrodinger packet against a barrier or slits");
  configure(wp);
  add_common(wp, wp_o.c);
  wp->add_option("--scenario", wp_o.scenario, "barrier, single_slit or double_slit");
  wp->add_option("--nx", wp_o.grid.nx, "Grid nodes along x");
  wp->add_option("--ny", wp_o.grid.ny, "Grid nodes along y");
  wp->add_option("--dx", wp_o.grid.dx, "Grid spacing");
  wp->add_option("--dt", wp_o.grid.dt, "Time step");
  wp->add_option("--stencil", wp_o.stencil, "Line operator: compact (4th order) or five_point");
  wp->add_option("--steps", wp_o.steps, "Number of time steps");
  wp->add_option("--snapshot-every", wp_o.snapshot_every, "Frame cadence in steps (0: first and last)");
  wp->add_option("--barrier-x", wp_o.s.barrier_x, "Left edge of the wall");
  wp->add_option("--thickness", wp_o.s.thickness, "Wall thickness");
  wp->add_option("--v0", wp_o.s.v0, "Wall height");
  wp->add_option("--slit-width", wp_o.s.slit_width, "Slit opening");
  wp->add_option("--slit-separation", wp_o.s.slit_separation, "Centre-to-centre slit distance");
  wp->add_option("--x0", wp_o.s.x0, "Packet centre x");
  wp->add_option("--y0", wp_o.s.y0, "Packet centre y (negative: domain centre line)");
  wp->add_option("--sigma", wp_o.s.sigma, "Packet width");
  wp->add_option("--k0x", wp_o.s.k0x, "Packet wavenumber along x");
  wp->add_option("--format", wp_o.format, "Frame format: text or pgm");
  wp->add_option("--out-dir", wp_o.out_dir, "Directory for frames and manifest.json");

  MgCmd mg_o;
  auto* mg = app.add_subcommand("mackey-glass", "Export the Mackey-Glass series as t,x CSV");
  configure(mg);
  add_common(mg, mg_o.c);
  add_mg(mg, mg_o.mg);
  mg->add_option("--samples", mg_o.samples, "Number of samples");
  mg->add_flag("--raw", mg_o.raw, "Skip min-max normalization");
  mg->add_option("--out", mg_o.out, "CSV path ('-' for stdout)");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* shown = &app;
    for (const CLI::App* s : {act, sp, fnn, rnn, bnn, esn, wp, mg, train}) {
      if (s->parsed()) {
        shown = s;
        break;
      }
    }
    std::cerr << shown->help();
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (act->parsed()) return run_activation(act_o, act, args);
    if (sp->parsed()) return run_spectrum(sp_o, sp, args);
    if (fnn->parsed()) return run_fnn(fnn_o, fnn, args);
    if (rnn->parsed()) return run_rnn(rnn_o, rnn, args);
    if (bnn->parsed()) return run_bnn(bnn_o, bnn, args);
    if (esn->parsed()) return run_esn(esn_o, esn, args);
    if (wp->parsed()) return run_wavepacket(wp_o, wp, args);
    if (mg->parsed()) return run_mg(mg_o, mg, args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cerr << app.help();
  return 1;
}

}  // namespace qtnn::cli
