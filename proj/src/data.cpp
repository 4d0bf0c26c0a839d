#include "qtnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "qtnn/errors.hpp"

namespace qtnn {

namespace fs = std::filesystem;

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out(labels_onehot.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = labels_onehot.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

LabeledDataset LabeledDataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw ShapeError("dataset slice out of range");
  LabeledDataset d;
  d.class_names = class_names;
  d.image_rows = image_rows;
  d.image_cols = image_cols;
  d.inputs = Matrix(count, inputs.cols());
  d.labels_onehot = Matrix(count, labels_onehot.cols());
  std::copy_n(inputs.values().begin() + static_cast<std::ptrdiff_t>(begin * inputs.cols()),
              count * inputs.cols(), d.inputs.values().begin());
  std::copy_n(labels_onehot.values().begin() +
                  static_cast<std::ptrdiff_t>(begin * labels_onehot.cols()),
              count * labels_onehot.cols(), d.labels_onehot.values().begin());
  return d;
}

void LabeledDataset::validate() const {
  if (inputs.rows() != labels_onehot.rows()) {
    throw FormatError("dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                      std::to_string(labels_onehot.rows()) + " labels");
  }
  for (double v : inputs.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError("dataset input outside [0, 1]");
  }
  for (std::size_t i = 0; i < labels_onehot.rows(); ++i) {
    int ones = 0;
    for (double v : labels_onehot.row(i)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw FormatError("label row " + std::to_string(i) + " is not one-hot");
      }
    }
    if (ones != 1) throw FormatError("label row " + std::to_string(i) + " is not one-hot");
  }
  if (!class_names.empty() && class_names.size() != labels_onehot.cols()) {
    throw FormatError("class name count does not match label width");
  }
}

std::vector<std::string> digit_class_names() {
  return {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
}

std::vector<std::string> fashion_class_names() {
  return {"T-shirt/top", "Trouser", "Pullover", "Dress", "Coat",
          "Sandal",      "Shirt",   "Sneaker",  "Bag",   "Ankle boot"};
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const fs::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError("'" + path.string() + "' truncated at byte offset " +
                      std::to_string(offset) + " (header)");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

LabeledDataset load_idx(const fs::path& images_path, const fs::path& labels_path,
                        std::vector<std::string> class_names) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kImageMagic) {
    throw FormatError("'" + images_path.string() + "' bad image magic " + hex32(img_magic) +
                      " at byte offset 0");
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kLabelMagic) {
    throw FormatError("'" + labels_path.string() + "' bad label magic " + hex32(lab_magic) +
                      " at byte offset 0");
  }
  const std::size_t n = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_labels = read_be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " ('" + images_path.string() +
                      "', byte offset 4) != label count " + std::to_string(n_labels) + " ('" +
                      labels_path.string() + "', byte offset 4)");
  }
  const std::size_t features = rows * cols;
  if (img.size() < 16 + n * features) {
    throw FormatError("'" + images_path.string() + "' truncated: payload ends at byte offset " +
                      std::to_string(img.size()) + ", expected " +
                      std::to_string(16 + n * features));
  }
  if (lab.size() < 8 + n) {
    throw FormatError("'" + labels_path.string() + "' truncated: payload ends at byte offset " +
                      std::to_string(lab.size()) + ", expected " + std::to_string(8 + n));
  }
  const std::size_t classes = class_names.size();

  LabeledDataset d;
  d.class_names = std::move(class_names);
  d.image_rows = rows;
  d.image_cols = cols;
  d.inputs = Matrix(n, features);
  d.labels_onehot = Matrix(n, classes);
  auto px = d.inputs.values();
  for (std::size_t i = 0; i < n * features; ++i) px[i] = static_cast<double>(img[16 + i]) / 255.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = lab[8 + i];
    if (label >= classes) {
      throw FormatError("'" + labels_path.string() + "' label " + std::to_string(label) +
                        " out of range at byte offset " + std::to_string(8 + i));
    }
    d.labels_onehot(i, label) = 1.0;
  }
  d.validate();
  return d;
}

void write_idx(const LabeledDataset& data, const fs::path& images_path,
               const fs::path& labels_path) {
  std::size_t rows = data.image_rows, cols = data.image_cols;
  if (rows * cols != data.inputs.cols()) {
    rows = 1;
    cols = data.inputs.cols();
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img) throw IoError("cannot write '" + images_path.string() + "'");
  if (!lab) throw IoError("cannot write '" + labels_path.string() + "'");
  put_be32(img, kImageMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  std::vector<char> buf(data.inputs.size());
  auto px = data.inputs.values();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    buf[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(px[i] * 255.0)));
  }
  img.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  put_be32(lab, kLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t label : data.labels()) lab.put(static_cast<char>(label));
  if (!img || !lab) throw IoError("IDX write failed");
}

fs::path data_dir() {
  if (const char* env = std::getenv("QTNN_DATA_DIR"); env && *env) return fs::path(env);
  return fs::path("data");
}

LabeledDataset load_idx_split(const fs::path& root, const std::string& subdir,
                              const std::string& split, std::vector<std::string> class_names) {
  const fs::path dir = root / subdir;
  return load_idx(dir / (split + "-images-idx3-ubyte"), dir / (split + "-labels-idx1-ubyte"),
                  std::move(class_names));
}

namespace {

// Splits one CSV record into (text, label); text may be double-quoted.
bool split_record(const std::string& line, std::string& text, std::string& label) {
  if (!line.empty() && line.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < line.size(); ++i) {
      if (line[i] == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out += '"';
          ++i;
        } else {
          break;
        }
      } else {
        out += line[i];
      }
    }
    if (i >= line.size() || i + 1 >= line.size() || line[i + 1] != ',') return false;
    text = out;
    label = line.substr(i + 2);
    return true;
  }
  const auto comma = line.rfind(',');
  if (comma == std::string::npos) return false;
  text = line.substr(0, comma);
  label = line.substr(comma + 1);
  return true;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

SentimentCorpus parse_sentiment(std::istream& in, const std::string& source) {
  SentimentCorpus c;
  c.vocab.push_back("<pad>");
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (trim(line) != "text,label") {
        throw FormatError(source + ":" + std::to_string(line_no) +
                          ": expected header 'text,label'");
      }
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    std::string text, label;
    if (!split_record(line, text, label)) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": malformed record");
    }
    label = trim(label);
    if (label != "0" && label != "1") {
      throw FormatError(source + ":" + std::to_string(line_no) + ": label '" + label +
                        "' is not 0 or 1");
    }
    std::vector<std::size_t> seq;
    std::istringstream words(text);
    std::string w;
    while (words >> w) {
      std::transform(w.begin(), w.end(), w.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      auto [it, inserted] = c.index.emplace(w, c.vocab.size());
      if (inserted) c.vocab.push_back(w);
      seq.push_back(it->second);
    }
    if (seq.empty()) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": empty text");
    }
    c.phrases.push_back(std::move(seq));
    c.labels.push_back(label == "1" ? 1 : 0);
  }
  if (!header_seen) throw FormatError(source + ": missing header 'text,label'");
  return c;
}

SentimentCorpus load_sentiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_sentiment(in, path.string());
}

fs::path bundled_sentiment_path() { return fs::path(QTNN_SOURCE_DIR) / "data" / "sentiment.csv"; }

std::pair<SentimentCorpus, SentimentCorpus> split_sentiment(const SentimentCorpus& corpus) {
  SentimentCorpus train, test;
  for (auto* part : {&train, &test}) {
    part->vocab = corpus.vocab;
    part->index = corpus.index;
  }
  std::size_t seen[2] = {0, 0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int y = corpus.labels[i];
    SentimentCorpus& dst = (seen[y]++ % 4 == 3) ? test : train;
    dst.phrases.push_back(corpus.phrases[i]);
    dst.labels.push_back(y);
  }
  return {std::move(train), std::move(test)};
}

void MgConfig::validate() const {
  if (!(beta > 0 && gamma > 0 && tau > 0 && q > 0 && dt > 0 && x0 > 0) || sample_every == 0) {
    throw ConfigError("Mackey-Glass parameters must be positive");
  }
  const double steps = tau / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw ConfigError("Mackey-Glass tau/dt must be an integer");
  }
}

std::vector<double> mackey_glass_raw(const MgConfig& cfg, std::size_t n_samples) {
  cfg.validate();
  if (n_samples == 0) throw InputError("mackey_glass: n_samples must be >= 1");
  const auto delay = static_cast<std::size_t>(std::llround(cfg.tau / cfg.dt));
  const std::size_t ring = delay + 1;
  const double dt = cfg.dt;
  auto rhs = [&](double x, double xd) {
    return cfg.beta * xd / (1.0 + std::pow(xd, cfg.q)) - cfg.gamma * x;
  };

  // Node j (time j·dt) lives in slot j mod ring; nodes −delay..0 form the
  // constant initial history, whose derivative is zero before t = 0.
  std::vector<double> hx(ring, cfg.x0), hf(ring, 0.0);
  double x = cfg.x0;
  hf[0] = rhs(cfg.x0, cfg.x0);

  std::vector<double> out;
  out.reserve(n_samples);
  std::size_t emitted = 0;
  for (std::size_t n = 0; out.size() < n_samples; ++n) {
    const std::size_t a = (n + 1) % ring;  // node n − delay
    const std::size_t b = (n + 2) % ring;  // node n − delay + 1
    const double xa = hx[a], xb = hx[b];
    // The interval ending at t = 0 is still flat history; hf at node 0 holds
    // the right derivative, which belongs to the next interval.
    const double xm = n + 1 == delay ? 0.5 * (xa + xb) : 0.5 * (xa + xb) + dt / 8.0 * (hf[a] - hf[b]);
    const double k1 = rhs(x, xa);
    const double k2 = rhs(x + 0.5 * dt * k1, xm);
    const double k3 = rhs(x + 0.5 * dt * k2, xm);
    const double k4 = rhs(x + dt * k3, xb);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    // Node n + 1 overwrites node n − delay (slot a); its delayed partner is node n + 1 − delay (slot b).
    hx[a] = x;
    hf[a] = rhs(x, xb);
    if ((n + 1) % cfg.sample_every == 0) {
      if (++emitted > cfg.transient) out.push_back(x);
    }
  }
  return out;
}

void normalize_minmax(std::vector<double>& series) {
  if (series.empty()) return;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double min = *lo, span = *hi - *lo;
  if (span == 0.0) return;  // constant series stays as is
  for (double& v : series) v = (v - min) / span;
}

std::vector<double> mackey_glass(const MgConfig& cfg, std::size_t n_samples) {
  auto s = mackey_glass_raw(cfg, n_samples);
  normalize_minmax(s);
  return s;
}

void write_series_csv(const fs::path& path, std::span<const double> series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "t,x\n";
  out.precision(17);
  for (std::size_t i = 0; i < series.size(); ++i) out << i << ',' << series[i] << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace qtnn
