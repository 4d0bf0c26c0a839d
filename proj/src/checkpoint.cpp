#include "qtnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "qtnn/errors.hpp"

namespace qtnn {

namespace {

constexpr char kMagic[8] = {'Q', 'T', 'N', 'N', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xff));
  }
}

void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string bytes, std::string source) : bytes_(std::move(bytes)), src_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  void expect_magic() {
    need(8);
    if (std::memcmp(bytes_.data(), kMagic, 8) != 0) {
      throw FormatError(src_ + ": not a checkpoint (bad magic at offset 0)");
    }
    pos_ = 8;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(src_ + ": " + what + " at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated checkpoint");
  }
  std::string bytes_;
  std::string src_;
  std::size_t pos_ = 0;
};

Checkpoint expect_arch(Checkpoint c, Architecture arch, std::size_t n_tensors,
                       const std::filesystem::path& path) {
  if (c.arch != arch) {
    throw FormatError(path.string() + ": checkpoint holds architecture " +
                      std::to_string(static_cast<std::uint32_t>(c.arch)) + ", expected " +
                      std::to_string(static_cast<std::uint32_t>(arch)));
  }
  if (c.tensors.size() != n_tensors) {
    throw FormatError(path.string() + ": expected " + std::to_string(n_tensors) + " tensors, found " +
                      std::to_string(c.tensors.size()));
  }
  return c;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string out(kMagic, 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.arch));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.act.tag));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.act.barrier.mode));
  const auto& b = ckpt.act.barrier;
  for (double v : {b.v0, b.a, b.m, b.hbar, b.ampl}) put_f64(out, v);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
  }
  for (const auto& t : ckpt.tensors)
    for (double v : t.values()) put_f64(out, v);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  r.expect_magic();
  if (r.get<std::uint32_t>() != kCheckpointVersion) r.fail("unsupported checkpoint version");
  Checkpoint c;
  const auto arch = r.get<std::uint32_t>();
  if (arch < 1 || arch > 4) r.fail("unknown architecture tag " + std::to_string(arch));
  c.arch = static_cast<Architecture>(arch);
  const auto tag = r.get<std::uint32_t>();
  if (tag > static_cast<std::uint32_t>(ActivationTag::identity)) {
    r.fail("unknown activation tag " + std::to_string(tag));
  }
  const auto mode = r.get<std::uint32_t>();
  if (mode > static_cast<std::uint32_t>(QtMode::bipolar)) r.fail("unknown qt mode " + std::to_string(mode));
  c.act.tag = static_cast<ActivationTag>(tag);
  auto& b = c.act.barrier;
  b.mode = static_cast<QtMode>(mode);
  b.v0 = r.get_f64();
  b.a = r.get_f64();
  b.m = r.get_f64();
  b.hbar = r.get_f64();
  b.ampl = r.get_f64();
  const auto n = r.get<std::uint32_t>();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dims;
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (cols != 0 && rows > (1ull << 40) / cols) r.fail("tensor dimensions overflow");
    total += rows * cols;
    dims.emplace_back(rows, cols);
  }
  if (r.remaining() != total * 8) {
    r.fail("payload holds " + std::to_string(r.remaining()) + " bytes, header promises " +
           std::to_string(total * 8));
  }
  for (auto [rows, cols] : dims) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = r.get_f64();
    c.tensors.push_back(std::move(m));
  }
  return c;
}

void save_model(const std::filesystem::path& path, const FnnModel& m) {
  write_checkpoint(path, {Architecture::fnn, m.hidden_act, {m.w1, m.b1, m.w2, m.b2}});
}

void save_model(const std::filesystem::path& path, const RnnModel& m) {
  write_checkpoint(path, {Architecture::rnn, m.hidden_act, {m.embed, m.wx, m.wh, m.bh, m.wy, m.by}});
}

void save_model(const std::filesystem::path& path, const BnnModel& m) {
  Matrix meta(1, 1, static_cast<double>(m.n_samples));
  write_checkpoint(path, {Architecture::bnn, m.hidden_act,
                          {m.w1_mean, m.w1_std, m.w2_mean, m.w2_std, m.b1, m.b2, meta}});
}

void save_model(const std::filesystem::path& path, const EsnModel& m) {
  Matrix meta = Matrix::from_rows(
      {{m.rho_target, m.density, static_cast<double>(m.washout), m.ridge_lambda}});
  write_checkpoint(path, {Architecture::esn, m.act, {m.w_in, m.w_res, m.w_out, meta}});
}

FnnModel load_fnn(const std::filesystem::path& path) {
  auto c = expect_arch(read_checkpoint(path), Architecture::fnn, 4, path);
  FnnModel m{std::move(c.tensors[0]), std::move(c.tensors[1]), std::move(c.tensors[2]),
             std::move(c.tensors[3]), c.act};
  m.validate();
  return m;
}

RnnModel load_rnn(const std::filesystem::path& path) {
  auto c = expect_arch(read_checkpoint(path), Architecture::rnn, 6, path);
  RnnModel m;
  m.embed = std::move(c.tensors[0]);
  m.wx = std::move(c.tensors[1]);
  m.wh = std::move(c.tensors[2]);
  m.bh = std::move(c.tensors[3]);
  m.wy = std::move(c.tensors[4]);
  m.by = std::move(c.tensors[5]);
  m.hidden_act = c.act;
  m.validate();
  return m;
}

BnnModel load_bnn(const std::filesystem::path& path) {
  auto c = expect_arch(read_checkpoint(path), Architecture::bnn, 7, path);
  BnnModel m;
  m.w1_mean = std::move(c.tensors[0]);
  m.w1_std = std::move(c.tensors[1]);
  m.w2_mean = std::move(c.tensors[2]);
  m.w2_std = std::move(c.tensors[3]);
  m.b1 = std::move(c.tensors[4]);
  m.b2 = std::move(c.tensors[5]);
  if (c.tensors[6].size() != 1) throw FormatError(path.string() + ": malformed BNN metadata");
  m.n_samples = static_cast<std::size_t>(c.tensors[6](0, 0));
  m.hidden_act = c.act;
  m.validate();
  return m;
}

EsnModel load_esn(const std::filesystem::path& path) {
  auto c = expect_arch(read_checkpoint(path), Architecture::esn, 4, path);
  const Matrix& meta = c.tensors[3];
  if (meta.rows() != 1 || meta.cols() != 4) throw FormatError(path.string() + ": malformed ESN metadata");
  EsnModel m;
  m.w_in = std::move(c.tensors[0]);
  m.w_res = std::move(c.tensors[1]);
  m.w_out = std::move(c.tensors[2]);
  m.act = c.act;
  m.rho_target = meta(0, 0);
  m.density = meta(0, 1);
  m.washout = static_cast<std::size_t>(meta(0, 2));
  m.ridge_lambda = meta(0, 3);
  if (m.w_res.rows() != m.w_res.cols() || m.w_in.rows() != m.w_res.rows()) {
    throw FormatError(path.string() + ": inconsistent ESN tensor shapes");
  }
  return m;
}

}  // namespace qtnn
