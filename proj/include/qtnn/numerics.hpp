#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace qtnn {

/// Dense row-major matrix of doubles. Vectors are 1×n or n×1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v);
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Product accumulates each output entry in ascending inner index. Zero
// entries of `a` are skipped, which leaves finite results unchanged.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
/// Adds a 1×cols row vector to every row of `m`.
void add_row_broadcast(Matrix& m, const Matrix& row_vector);
/// Sums the rows of `m` into a 1×cols matrix.
Matrix column_sums(const Matrix& m);
/// Rows `indices` of `m`, in order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
double max_abs(const Matrix& m);
double frobenius_norm(const Matrix& m);

/// Solves A X = B for symmetric positive-definite A via Cholesky.
/// Throws SingularityError naming the first non-positive pivot.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// Largest eigenvalue magnitude, from the full eigenvalue set (Hessenberg QR).
/// A zero matrix yields 0.
double spectral_radius(const Matrix& w);

/// One-sided DFT magnitudes |Σ x_n e^{-2πikn/N}| for k = 0..N/2, radix-2 FFT.
std::vector<double> dft_magnitude(std::span<const double> signal);

/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream for (seed, index); used for per-purpose substreams.
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() noexcept;
  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }
  /// Uniform on [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  /// Standard normal via Box–Muller; the second variate of each pair is cached.
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Fills `out` with standard normals from a ziggurat sampler. Much faster
  /// than repeated normal() and a different sequence; used for weight noise.
  void fill_normal(std::span<double> out);

  /// Fisher–Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace qtnn
