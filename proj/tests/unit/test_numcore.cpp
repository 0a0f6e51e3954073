#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "hoopnet/errors.hpp"
#include "hoopnet/numcore.hpp"

using namespace hoopnet;
using num::Matrix;

TEST_CASE("matmul") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(num::matmul(Matrix::identity(2), a) == a);
  CHECK(num::matmul(a, Matrix::from_rows({{5}, {6}})) == Matrix::from_rows({{17}, {39}}));

  SUBCASE("shape mismatch names both shapes") {
    try {
      num::matmul(Matrix(2, 3), Matrix(2, 2));
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string what = e.what();
      CHECK(what.find("2x3") != std::string::npos);
      CHECK(what.find("2x2") != std::string::npos);
    }
  }
}

TEST_CASE("activations") {
  CHECK(num::sigmoid(0.0) == 0.5);
  CHECK(std::tanh(0.0) == 0.0);
  CHECK(num::relu(-3.0) == 0.0);
  CHECK(num::sigmoid(800.0) == 1.0);
  CHECK(num::sigmoid(-800.0) >= 0.0);

  const Matrix x = Matrix::from_rows({{0.0, -3.0, 2.0}});
  CHECK(num::activate(x, num::Activation::kRelu) == Matrix::from_rows({{0.0, 0.0, 2.0}}));
  CHECK(num::activate(x, num::Activation::kSigmoid)(0, 0) == 0.5);
  CHECK_THROWS_AS(num::activate(Matrix::from_rows({{std::nan("")}}), num::Activation::kTanh),
                  DomainError);
}

TEST_CASE("seeded gaussian draws") {
  num::SeededRng a(42), b(42);
  CHECK(num::gaussian_draw(a, 1000) == num::gaussian_draw(b, 1000));

  num::SeededRng rng(7);
  const auto xs = num::gaussian_draw(rng, 1'000'000);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.01);

  CHECK_THROWS_AS(num::gaussian_draw(rng, 0), DomainError);
}

TEST_CASE("sub-streams are independent of each other") {
  const num::SeededRng root(5);
  auto init = root.split(num::Stream::kInit);
  auto data = root.split(num::Stream::kData);
  CHECK(init.next_u64() != data.next_u64());

  // Draining one stream leaves a sibling untouched.
  auto init2 = root.split(num::Stream::kInit);
  for (int i = 0; i < 100; ++i) init2.next_u64();
  auto data2 = root.split(num::Stream::kData);
  auto data3 = root.split(num::Stream::kData);
  CHECK(data2.next_u64() == data3.next_u64());
}

TEST_CASE("finite differences") {
  const num::ScalarFunction square = [](std::span<const double> t) { return t[0] * t[0]; };
  const std::vector<double> three{3.0};
  CHECK(std::abs(num::finite_diff_grad(square, three, 1e-5)[0] - 6.0) < 1e-8);

  const num::ScalarFunction sine = [](std::span<const double> t) { return std::sin(t[0]); };
  const std::vector<double> zero{0.0};
  CHECK(std::abs(num::finite_diff_grad(sine, zero, 1e-5)[0] - 1.0) < 1e-9);

  const num::ScalarFunction constant = [](std::span<const double>) { return 4.0; };
  const std::vector<double> theta{1.0, -2.0, 0.5};
  CHECK(num::finite_diff_grad(constant, theta, 1e-5) == std::vector<double>(3, 0.0));

  const num::ScalarFunction blowup = [](std::span<const double> t) {
    return t[0] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  CHECK_THROWS_AS(num::finite_diff_grad(blowup, zero, 1e-5), OracleError);

  const num::ExtendedScalarFunction cube = [](std::span<const long double> t) {
    return t[0] * t[0] * t[0];
  };
  const std::vector<long double> two{2.0L};
  CHECK(std::abs(static_cast<double>(num::finite_diff_coordinate(cube, two, 0, 1e-5L)) - 12.0) <
        1e-8);
}
