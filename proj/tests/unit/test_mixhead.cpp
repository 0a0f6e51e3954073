#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "generators.hpp"
#include "hoopnet/errors.hpp"
#include "hoopnet/mixhead.hpp"

using namespace hoopnet;
using mdn::Component;
using mdn::Mixture;
using mdn::TargetPoint;

namespace {

constexpr double kPi = std::numbers::pi;

// Direct evaluation of the bivariate-times-univariate normal, no logs.
double naive_density(const Mixture& mix, const TargetPoint& y) {
  double p = 0.0;
  for (const auto& c : mix.components) {
    const double zx = (y.dx - c.mean[0]) / c.sigma[0];
    const double zy = (y.dy - c.mean[1]) / c.sigma[1];
    const double zz = (y.dz - c.mean[2]) / c.sigma[2];
    const double q = 1.0 - c.rho * c.rho;
    const double n2 = std::exp(-(zx * zx + zy * zy - 2.0 * c.rho * zx * zy) / (2.0 * q)) /
                      (2.0 * kPi * c.sigma[0] * c.sigma[1] * std::sqrt(q));
    const double n1 = std::exp(-0.5 * zz * zz) / (std::sqrt(2.0 * kPi) * c.sigma[2]);
    p += c.weight * n2 * n1;
  }
  return p;
}

Mixture single(double rho = 0.0) {
  Component c;
  c.rho = rho;
  return Mixture{{c}};
}

Mixture three_components() {
  Mixture m;
  m.components.push_back({0.2, {-1.0, 0.5, 0.0}, {0.5, 1.0, 0.8}, 0.3});
  m.components.push_back({0.5, {2.0, -1.0, 1.0}, {1.2, 0.4, 0.3}, -0.6});
  m.components.push_back({0.3, {0.0, 3.0, -2.0}, {0.7, 0.7, 1.5}, 0.0});
  return m;
}

}  // namespace

TEST_CASE("normalize") {
  std::vector<double> raw(24, 0.0);
  auto mix = mdn::normalize(raw);
  for (const auto& c : mix.components) {
    CHECK(c.weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(c.sigma == std::array<double, 3>{1.0, 1.0, 1.0});
    CHECK(c.rho == 0.0);
  }

  raw[0] = 1.0;
  raw[8] = 2.0;
  raw[16] = 3.0;
  mix = mdn::normalize(raw);
  CHECK(mix.components[0].weight == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(mix.components[1].weight == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(mix.components[2].weight == doctest::Approx(0.66524).epsilon(1e-4));

  SUBCASE("clamps") {
    std::vector<double> r(8, 0.0);
    r[mdn::raw::kSigmaX] = 1e6;
    r[mdn::raw::kSigmaY] = -1e6;
    r[mdn::raw::kRho] = 1e6;
    const auto c = mdn::normalize(r).components[0];
    CHECK(c.sigma[0] == std::exp(mdn::kSigmaRawMax));
    CHECK(c.sigma[1] == std::exp(mdn::kSigmaRawMin));
    CHECK(c.rho == std::tanh(mdn::kRhoRawMax));
  }

  SUBCASE("bad input") {
    CHECK_THROWS_AS(mdn::normalize(std::vector<double>(7, 0.0)), ShapeError);
    std::vector<double> r(8, 0.0);
    r[3] = std::nan("");
    CHECK_THROWS_AS(mdn::normalize(r), DomainError);
  }
}

TEST_CASE("normalize output always satisfies the mixture invariants") {
  num::SeededRng rng(77);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const auto mix = mdn::normalize(testgen::random_raw(rng, n, trial % 2 ? 1e3 : 20.0));
    double total = 0.0;
    for (const auto& c : mix.components) {
      total += c.weight;
      for (double s : c.sigma) REQUIRE(s > 0.0);
      REQUIRE(std::abs(c.rho) < 1.0);
    }
    REQUIRE(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("closed-form densities") {
  const TargetPoint origin{};
  CHECK(mdn::density(single(), origin) == doctest::Approx(0.0634936).epsilon(1e-6));
  CHECK(std::abs(mdn::density(single(), origin) - 1.0 / (2.0 * kPi * std::sqrt(2.0 * kPi))) < 1e-15);

  const double biv = 1.0 / (2.0 * kPi * std::sqrt(0.75));
  CHECK(biv == doctest::Approx(0.183776).epsilon(1e-6));
  CHECK(std::abs(mdn::density(single(0.5), origin) - biv / std::sqrt(2.0 * kPi)) < 1e-15);
  CHECK(mdn::density(single(0.5), origin) == doctest::Approx(0.0733160).epsilon(1e-6));

  Mixture twice = single();
  twice.components.push_back(twice.components[0]);
  twice.components[0].weight = twice.components[1].weight = 0.5;
  CHECK(mdn::density(twice, {0.3, -0.2, 1.0}) ==
        doctest::Approx(mdn::density(single(), {0.3, -0.2, 1.0})).epsilon(1e-14));

  const std::vector<Mixture> one{single()};
  const std::vector<TargetPoint> at_origin{origin};
  CHECK(mdn::nll(one, at_origin) == doctest::Approx(2.7568).epsilon(1e-4));
  CHECK(std::abs(mdn::nll(one, at_origin) - (std::log(2.0 * kPi) + 0.5 * std::log(2.0 * kPi))) <
        1e-14);
  const std::vector<Mixture> dup{twice};
  CHECK(mdn::nll(dup, at_origin) == doctest::Approx(mdn::nll(one, at_origin)).epsilon(1e-14));

  Mixture broken = single();
  broken.components[0].rho = 1.0;
  CHECK_THROWS_AS(mdn::density(broken, origin), DomainError);
}

TEST_CASE("log-sum-exp NLL matches the naive path") {
  num::SeededRng rng(31);
  int compared = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const auto mix = mdn::normalize(testgen::random_raw(rng, 1 + rng.below(4), 3.0));
    const TargetPoint y{3.0 * rng.normal(), 3.0 * rng.normal(), 3.0 * rng.normal()};
    const double naive = naive_density(mix, y);
    if (!(naive > 1e-300) || !std::isfinite(naive)) continue;
    const std::vector<Mixture> m{mix};
    const std::vector<TargetPoint> t{y};
    CHECK(std::abs(mdn::nll(m, t) + std::log(naive)) < 1e-10);
    ++compared;
  }
  CHECK(compared > 1000);

  SUBCASE("far tails stay finite") {
    const std::vector<Mixture> m{single()};
    const std::vector<TargetPoint> far{{1e3, -1e3, 1e3}};
    CHECK(std::isfinite(mdn::nll(m, far)));
  }
}

TEST_CASE("raw gradient of the NLL matches finite differences") {
  num::SeededRng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(3);
    auto raw = testgen::random_raw(rng, n, 2.0);  // inside the clamps
    const TargetPoint y{rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> grad(raw.size());
    const double value = mdn::nll_and_raw_gradient(raw, y, grad);
    const std::vector<Mixture> m{mdn::normalize(raw)};
    const std::vector<TargetPoint> t{y};
    CHECK(value == doctest::Approx(mdn::nll(m, t)).epsilon(1e-12));

    const num::ScalarFunction f = [&](std::span<const double> r) {
      const std::vector<Mixture> mm{mdn::normalize(r)};
      return mdn::nll(mm, t);
    };
    const auto numeric = num::finite_diff_grad(f, raw, 1e-6);
    for (std::size_t k = 0; k < raw.size(); ++k) {
      CHECK(std::abs(grad[k] - numeric[k]) < 1e-6 * std::max(1.0, std::abs(numeric[k])));
    }
  }
}

TEST_CASE("roulette_pick") {
  Mixture m = three_components();
  m.components[0].weight = 1.0;
  m.components[1].weight = m.components[2].weight = 0.0;
  for (double u : {0.0, 0.3, 0.999999, 1.0}) CHECK(mdn::roulette_pick(m, u) == 0);

  m.components[0].weight = 0.2;
  m.components[1].weight = 0.5;
  m.components[2].weight = 0.3;
  CHECK(mdn::roulette_pick(m, 0.65) == 1);
  CHECK(mdn::roulette_pick(m, 0.1) == 0);
  CHECK(mdn::roulette_pick(m, 0.71) == 2);

  num::SeededRng rng(2);
  std::array<int, 3> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[mdn::roulette_pick(m, rng.uniform())];
  CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 0.5) < 0.01);
  CHECK(std::abs(counts[2] / double(n) - 0.3) < 0.01);
}

TEST_CASE("sample_point") {
  num::SeededRng rng(13);

  SUBCASE("vanishing sigma returns the mean") {
    Mixture m = single();
    m.components[0].mean = {1.0, -2.0, 0.5};
    m.components[0].sigma = {std::exp(-30.0), std::exp(-30.0), std::exp(-30.0)};
    for (int i = 0; i < 100; ++i) {
      const auto p = mdn::sample_point(m, rng);
      CHECK(std::abs(p.dx - 1.0) < 1e-6);
      CHECK(std::abs(p.dy + 2.0) < 1e-6);
      CHECK(std::abs(p.dz - 0.5) < 1e-6);
    }
  }

  SUBCASE("correlation") {
    const Mixture m = single(0.5);
    const int n = 100000;
    double sx = 0, sy = 0, sz = 0, sxx = 0, syy = 0, szz = 0, sxy = 0, sxz = 0;
    for (int i = 0; i < n; ++i) {
      const auto p = mdn::sample_point(m, rng);
      sx += p.dx; sy += p.dy; sz += p.dz;
      sxx += p.dx * p.dx; syy += p.dy * p.dy; szz += p.dz * p.dz;
      sxy += p.dx * p.dy; sxz += p.dx * p.dz;
    }
    const auto cov = [n](double sab, double sa, double sb) { return sab / n - (sa / n) * (sb / n); };
    const double vx = cov(sxx, sx, sx), vy = cov(syy, sy, sy), vz = cov(szz, sz, sz);
    CHECK(std::abs(cov(sxy, sx, sy) / std::sqrt(vx * vy) - 0.5) < 0.02);
    CHECK(std::abs(cov(sxz, sx, sz) / std::sqrt(vx * vz)) < 0.02);
  }
}

TEST_CASE("density grids") {
  SUBCASE("mode at the mean") {
    Mixture m = single();
    m.components[0].mean = {0.4, -0.6, 0.0};
    const auto grid = mdn::density_grid(m, mdn::Plane::kXY, {-3, 3, -3, 3}, 61, 61);
    const auto peak = grid.argmax();
    CHECK(std::abs(peak[0] - 0.4) <= 0.05 + 1e-12);
    CHECK(std::abs(peak[1] + 0.6) <= 0.05 + 1e-12);
  }

  SUBCASE("Riemann sum over six sigma matches the sliced normalization") {
    Mixture m = single(0.3);
    m.components[0].sigma = {0.7, 1.3, 0.5};
    const auto grid = mdn::density_grid(m, mdn::Plane::kXY, {-4.2, 4.2, -7.8, 7.8}, 121, 121);
    // The slice holds z at its mean, so the xy integral is the z density there.
    const double expect = 1.0 / (std::sqrt(2.0 * kPi) * 0.5);
    CHECK(std::abs(grid.riemann_sum() / expect - 1.0) < 0.02);

    const auto xz = mdn::density_grid(m, mdn::Plane::kXZ, {-4.2, 4.2, -3.0, 3.0}, 121, 121);
    CHECK(xz.fixed_coordinate == 0.0);
    CHECK(xz.riemann_sum() > 0.0);
  }

  SUBCASE("strong correlation tilts the principal axis to the diagonal") {
    const Mixture m = single(0.9);
    const auto grid = mdn::density_grid(m, mdn::Plane::kXY, {-4, 4, -4, 4}, 81, 81);
    double suu = 0, svv = 0, suv = 0;
    for (std::size_t i = 0; i < grid.u.size(); ++i) {
      for (std::size_t j = 0; j < grid.v.size(); ++j) {
        const double w = grid.at(i, j);
        suu += w * grid.u[i] * grid.u[i];
        svv += w * grid.v[j] * grid.v[j];
        suv += w * grid.u[i] * grid.v[j];
      }
    }
    const double angle = 0.5 * std::atan2(2.0 * suv, suu - svv);
    CHECK(std::abs(angle - kPi / 4.0) < 1e-3);
  }

  SUBCASE("empty bounds and tiny resolution") {
    CHECK_THROWS_AS(mdn::density_grid(single(), mdn::Plane::kXY, {1, 1, -1, 1}, 5, 5), DomainError);
    CHECK_THROWS_AS(mdn::density_grid(single(), mdn::Plane::kXY, {-1, 1, -1, 1}, 1, 5), DomainError);
  }

  SUBCASE("csv") {
    const auto grid = mdn::density_grid(single(), mdn::Plane::kYZ, {-1, 1, -1, 1}, 3, 2);
    std::ostringstream out;
    mdn::write_density_csv(out, grid);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "u,v,density");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
  }
}

TEST_CASE("affine transform of a mixture") {
  const Mixture m = three_components();
  const auto moved = m.affine({1.0, 2.0, 3.0}, {2.0, 0.5, 1.0});
  const TargetPoint y{0.3, -0.4, 1.1};
  const TargetPoint y_moved{1.0 + 2.0 * y.dx, 2.0 + 0.5 * y.dy, 3.0 + y.dz};
  // The scales multiply to 1, so the density carries over unchanged.
  CHECK(mdn::density(moved, y_moved) == doctest::Approx(mdn::density(m, y)).epsilon(1e-12));
  const auto mean = m.mean();
  const auto moved_mean = moved.mean();
  CHECK(moved_mean[0] == doctest::Approx(1.0 + 2.0 * mean[0]));
  CHECK(moved_mean[1] == doctest::Approx(2.0 + 0.5 * mean[1]));
  CHECK_THROWS_AS(m.affine({0, 0, 0}, {1, 0, 1}), DomainError);
}
