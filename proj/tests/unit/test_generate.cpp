#include <doctest.h>

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "hoopnet/errors.hpp"
#include "hoopnet/generate.hpp"

using namespace hoopnet;

namespace {

struct Fixture {
  seq::ModelParams model;
  data::FeatureScaler scaler;
  std::vector<data::Frame> prefix;
};

Fixture make_fixture(std::size_t components, std::uint64_t seed = 3) {
  num::SeededRng rng(seed);
  Fixture f;
  f.model = testgen::random_model(rng, {2, 8, components, 12, 4});
  f.scaler.mean = {-10.0, 2.0, 1.0, 300.0};
  f.scaler.std = {6.0, 4.0, 1.5, 200.0};
  f.scaler.offset_mean = {0.8, -0.1, -0.2};
  f.scaler.offset_std = {0.3, 0.2, 0.4};
  const auto shot = testgen::approach_shot("P", 9, 4.0);
  f.prefix = data::rim_relative(shot, data::CourtSpec{}).frames;
  return f;
}

}  // namespace

TEST_CASE("branching generation") {
  const auto fx = make_fixture(3);
  gen::GenerateOptions opt;
  opt.grid_resolution = 21;
  const auto result = gen::generate(fx.model, fx.scaler, fx.prefix, opt);

  REQUIRE(result.trajectories.size() == 8);
  CHECK(result.densities.size() == (1 + 2 + 4) * 3);
  for (std::size_t b = 0; b < 8; ++b) {
    const auto& t = result.trajectories[b];
    CHECK(t.branch_id == b);
    CHECK(t.observed == 9);
    REQUIRE(t.frames.size() == 12);
    for (std::size_t k = 0; k < 9; ++k) CHECK(t.frames[k].x == fx.prefix[k].x);
    for (std::size_t k = 9; k < 12; ++k) {
      CHECK(t.frames[k].clock == doctest::Approx(t.frames[k - 1].clock - 0.04));
    }
  }
  // Siblings share a parent path up to their split.
  CHECK(result.trajectories[0].frames[9].x == result.trajectories[1].frames[9].x);
  CHECK(result.trajectories[0].frames[11].x != result.trajectories[1].frames[11].x);

  std::ostringstream out;
  gen::write_trajectories_csv(out, result);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "branch_id,frame_idx,x_ft,y_ft,z_ft,game_clock_s,source");
  std::size_t rows = 0, generated = 0;
  while (std::getline(in, line)) {
    ++rows;
    generated += line.ends_with(",generated");
  }
  CHECK(rows == 8 * 12);
  CHECK(generated == 8 * 3);

  SUBCASE("same seed, same trajectories") {
    const auto again = gen::generate(fx.model, fx.scaler, fx.prefix, opt);
    for (std::size_t b = 0; b < 8; ++b) {
      CHECK(again.trajectories[b].frames.back().z == result.trajectories[b].frames.back().z);
    }
  }
}

TEST_CASE("degenerate sampling follows the mixture means") {
  gen::GenerateOptions opt;
  opt.branch_factor = 1;
  opt.grid_resolution = 5;
  opt.force_sigma_raw = -30.0;

  SUBCASE("one component: seed-independent mean path") {
    const auto fx = make_fixture(1);
    const auto a = gen::generate(fx.model, fx.scaler, fx.prefix, opt);
    opt.seed = 999;
    const auto b = gen::generate(fx.model, fx.scaler, fx.prefix, opt);
    REQUIRE(a.trajectories.size() == 1);
    auto path = fx.prefix;
    for (std::size_t k = 9; k < 12; ++k) {
      const auto mean = gen::next_point_mixture(fx.model, fx.scaler, path).mean();
      const auto& f = a.trajectories[0].frames[k];
      CHECK(std::abs(f.x - mean[0]) < 1e-6);
      CHECK(std::abs(f.y - mean[1]) < 1e-6);
      CHECK(std::abs(f.z - mean[2]) < 1e-6);
      CHECK(std::abs(b.trajectories[0].frames[k].x - f.x) < 1e-6);
      path.push_back(f);
    }
  }

  SUBCASE("several components: every point is one of the component means") {
    const auto fx = make_fixture(3);
    const auto a = gen::generate(fx.model, fx.scaler, fx.prefix, opt);
    auto path = fx.prefix;
    for (std::size_t k = 9; k < 12; ++k) {
      const auto mix = gen::next_point_mixture(fx.model, fx.scaler, path);
      const auto& f = a.trajectories[0].frames[k];
      bool matched = false;
      for (const auto& c : mix.components) {
        matched = matched || (std::abs(f.x - c.mean[0]) < 1e-6 && std::abs(f.y - c.mean[1]) < 1e-6 &&
                              std::abs(f.z - c.mean[2]) < 1e-6);
      }
      CHECK(matched);
      path.push_back(f);
    }
  }
}

TEST_CASE("next-point mixture and grid mode") {
  const auto fx = make_fixture(1);
  const auto mix = gen::next_point_mixture(fx.model, fx.scaler, fx.prefix);
  CHECK_NOTHROW(mix.validate());
  // Offsets are unscaled into feet around the last observed frame.
  const auto raw = seq::forward_sequence(fx.model, fx.scaler.scale_features([&] {
                                           num::Matrix m(fx.prefix.size(), 4);
                                           for (std::size_t t = 0; t < fx.prefix.size(); ++t) {
                                             m(t, 0) = fx.prefix[t].x;
                                             m(t, 1) = fx.prefix[t].y;
                                             m(t, 2) = fx.prefix[t].z;
                                             m(t, 3) = fx.prefix[t].clock;
                                           }
                                           return m;
                                         }()))
                       .mixture_raw;
  const double mu_x = raw(fx.prefix.size() - 1, mdn::raw::kMuX);
  CHECK(mix.components[0].mean[0] ==
        doctest::Approx(fx.prefix.back().x + fx.scaler.offset_mean[0] + fx.scaler.offset_std[0] * mu_x));

  const auto mode = gen::grid_mode(mix, 61, 3.0);
  const auto mean = mix.mean();
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(mode[k] - mean[k]) <= 0.05 + 1e-9);
}

TEST_CASE("generation argument checks") {
  const auto fx = make_fixture(1);
  gen::GenerateOptions opt;
  CHECK_THROWS_AS(gen::generate(fx.model, fx.scaler, std::span(fx.prefix).first(1), opt), DomainError);
  opt.branch_factor = 0;
  CHECK_THROWS_AS(gen::generate(fx.model, fx.scaler, fx.prefix, opt), DomainError);
}
