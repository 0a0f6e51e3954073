#pragma once

// Dense numeric primitives shared by every other module.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hoopnet::num {

/// Row-major dense matrix of doubles. Vectors are 1 x n matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double value);
  bool all_finite() const noexcept;
  std::string shape_string() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws ShapeError naming both shapes when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

enum class Activation { kSigmoid, kTanh, kRelu };

inline double sigmoid(double v) noexcept {
  // Split on sign so exp never overflows.
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline double relu(double v) noexcept { return v < 0.0 ? 0.0 : v; }  // NaN passes through

/// Elementwise activation. Non-finite input is rejected with DomainError.
Matrix activate(const Matrix& x, Activation kind);

/// Independent random sub-streams. Each consumer takes its own so that
/// changing how much one of them draws never shifts another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kData = 2,
  kSampling = 3,
  kShuffle = 4,
  kSearch = 5,
  kNoise = 6,
};

/// SplitMix64 finalizer; used to derive sub-stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seeded generator: std::mt19937_64 keyed by mix64(seed). Streams split by
/// tag are seeded from mix64(seed ^ mix64(tag)).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  SeededRng split(std::uint64_t tag) const;
  SeededRng split(Stream stream) const { return split(static_cast<std::uint64_t>(stream)); }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// n i.i.d. standard-normal draws. n must be >= 1.
std::vector<double> gaussian_draw(SeededRng& rng, std::size_t n);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient oracle: (f(θ+h·e_i) − f(θ−h·e_i)) / 2h.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> theta,
                                     double h);

/// Central difference along a single coordinate.
double finite_diff_coordinate(const ScalarFunction& f, std::span<const double> theta,
                              std::size_t index, double h);

/// Extended-precision variant. With a loss of magnitude L, a double oracle
/// cannot resolve derivatives much below eps * L / h.
using ExtendedScalarFunction = std::function<long double(std::span<const long double>)>;
long double finite_diff_coordinate(const ExtendedScalarFunction& f,
                                   std::span<const long double> theta, std::size_t index,
                                   long double h);

}  // namespace hoopnet::num
