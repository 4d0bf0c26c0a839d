#include "qtnn/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>
#include <Eigen/Eigenvalues>

#include "qtnn/errors.hpp"

namespace qtnn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + dims(a) + " x " + dims(b));
  }
  const std::size_t n = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  Matrix c(n, m);
  // Blocking over the inner dimension keeps a panel of b cache-resident while
  // preserving the ascending-k accumulation order of every c(i, j).
  constexpr std::size_t kBlock = 64;
  for (std::size_t k0 = 0; k0 < inner; k0 += kBlock) {
    const std::size_t k1 = std::min(inner, k0 + kBlock);
    for (std::size_t i = 0; i < n; ++i) {
      double* crow = c.row(i).data();
      const double* arow = a.row(i).data();
      for (std::size_t k = k0; k < k1; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.row(k).data();
        for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] += bv[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] -= bv[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.values()) v *= s;
  return c;
}

void add_row_broadcast(Matrix& m, const Matrix& row_vector) {
  if (row_vector.rows() != 1 || row_vector.cols() != m.cols()) {
    throw ShapeError("broadcast: " + dims(row_vector) + " onto " + dims(m));
  }
  const auto bias = row_vector.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  auto out = s.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return s;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix g(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(m.row(indices[i]).data(), m.cols(), g.row(i).data());
  }
  return g;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::abs(v));
  return best;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("solve_spd: matrix is " + dims(a) + ", not square");
  if (b.rows() != n) throw ShapeError("solve_spd: rhs " + dims(b) + " for " + dims(a));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) {
        throw InputError("solve_spd: matrix not symmetric at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
    }
  }

  // Lower Cholesky factor, row-oriented.
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = l.row(i).data();
    for (std::size_t j = 0; j <= i; ++j) {
      const double* lj = l.row(j).data();
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      if (i == j) {
        if (!(s > 0.0)) {
          throw SingularityError(
              "solve_spd: non-positive pivot " + std::to_string(s) + " at index " +
                  std::to_string(i) + " (matrix not positive definite)",
              i);
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }

  Matrix x = b;
  const std::size_t m = b.cols();
  // Forward substitution L y = b, then back substitution Lᵀ x = y.
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = l(i, k);
      if (lik == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t c = 0; c < m; ++c) xi[c] -= lik * xk[c];
    }
    const double d = l(i, i);
    for (std::size_t c = 0; c < m; ++c) xi[c] /= d;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double lki = l(k, ii);
      if (lki == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t c = 0; c < m; ++c) xi[c] -= lki * xk[c];
    }
    const double d = l(ii, ii);
    for (std::size_t c = 0; c < m; ++c) xi[c] /= d;
  }
  return x;
}

double spectral_radius(const Matrix& w) {
  const std::size_t n = w.rows();
  if (w.cols() != n) throw ShapeError("spectral_radius: matrix is " + dims(w) + ", not square");
  if (n == 0 || max_abs(w) == 0.0) return 0.0;
  if (!w.all_finite()) throw DomainError("spectral_radius: matrix has non-finite entries");
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      m(w.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> dft_magnitude(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 8 || !std::has_single_bit(n)) {
    throw InputError("dft_magnitude: length " + std::to_string(n) +
                     " is not a power of two >= 8");
  }
  std::vector<std::complex<double>> a(signal.begin(), signal.end());

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<std::complex<double>> twiddle(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto t = twiddle[k] * a[i + k + half];
        a[i + k + half] = a[i + k] - t;
        a[i + k] += t;
      }
    }
  }
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) mag[k] = std::abs(a[k]);
  return mag;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = index ^ 0x6a09e667f3bcc909ULL;
  const std::uint64_t mixed = splitmix64(x);
  return Rng(seed ^ mixed);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_index(std::uint64_t n) noexcept {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} / n) * n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

void Rng::fill_normal(std::span<double> out) {
  boost::random::normal_distribution<double> dist;
  for (double& v : out) v = dist(*this);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace qtnn
