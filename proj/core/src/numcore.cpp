#include "hoopnet/numcore.hpp"

#include <algorithm>

#include "hoopnet/errors.hpp"

namespace hoopnet::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix " + shape_string() + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " times " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  if (!out.all_finite()) throw DomainError("matmul produced non-finite values");
  return out;
}

Matrix activate(const Matrix& x, Activation kind) {
  if (!x.all_finite()) throw DomainError("activate: non-finite input");
  Matrix out = x;
  for (double& v : out.data()) {
    switch (kind) {
      case Activation::kSigmoid: v = sigmoid(v); break;
      case Activation::kTanh: v = std::tanh(v); break;
      case Activation::kRelu: v = relu(v); break;
    }
  }
  return out;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

SeededRng SeededRng::split(std::uint64_t tag) const { return SeededRng(seed_ ^ mix64(tag)); }

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t SeededRng::below(std::size_t n) {
  if (n == 0) throw DomainError("SeededRng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

std::vector<double> gaussian_draw(SeededRng& rng, std::size_t n) {
  if (n == 0) throw DomainError("gaussian_draw: n must be >= 1");
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

double finite_diff_coordinate(const ScalarFunction& f, std::span<const double> theta,
                              std::size_t index, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff: step must be positive");
  if (index >= theta.size()) throw DomainError("finite_diff: coordinate out of range");
  std::vector<double> probe(theta.begin(), theta.end());
  probe[index] = theta[index] + h;
  const double plus = f(probe);
  probe[index] = theta[index] - h;
  const double minus = f(probe);
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    throw OracleError("finite_diff: non-finite function value at coordinate " +
                      std::to_string(index));
  }
  return (plus - minus) / (2.0 * h);
}

long double finite_diff_coordinate(const ExtendedScalarFunction& f,
                                   std::span<const long double> theta, std::size_t index,
                                   long double h) {
  if (!(h > 0.0L)) throw DomainError("finite_diff: step must be positive");
  if (index >= theta.size()) throw DomainError("finite_diff: coordinate out of range");
  std::vector<long double> probe(theta.begin(), theta.end());
  probe[index] = theta[index] + h;
  const long double plus = f(probe);
  probe[index] = theta[index] - h;
  const long double minus = f(probe);
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    throw OracleError("finite_diff: non-finite function value at coordinate " +
                      std::to_string(index));
  }
  return (plus - minus) / (2.0L * h);
}

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> theta,
                                     double h) {
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) grad[i] = finite_diff_coordinate(f, theta, i, h);
  return grad;
}

}  // namespace hoopnet::num
