#pragma once

// Mixture density head over 3-D next-point offsets.
//
// Each component is a correlated bivariate normal in (x, y) times an
// independent univariate normal in z:
//
//   p(d) = sum_c w_c * N2(dx, dy | mu_x, mu_y, s_x, s_y, rho) * N1(dz | mu_z, s_z)
//
// Raw network outputs are laid out component-major, eight per component:
//   [w~, mu_x, mu_y, mu_z, s~_x, s~_y, s~_z, rho~]

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hoopnet/numcore.hpp"

namespace hoopnet::mdn {

inline constexpr std::size_t kRawPerComponent = 8;
inline constexpr std::size_t kDefaultComponents = 3;

/// Raw σ̃ and ρ̃ are clamped to these ranges before exp / tanh.
inline constexpr double kSigmaRawMin = -10.0;
inline constexpr double kSigmaRawMax = 10.0;
inline constexpr double kRhoRawMin = -8.0;
inline constexpr double kRhoRawMax = 8.0;

namespace raw {
inline constexpr std::size_t kWeight = 0;
inline constexpr std::size_t kMuX = 1;
inline constexpr std::size_t kMuY = 2;
inline constexpr std::size_t kMuZ = 3;
inline constexpr std::size_t kSigmaX = 4;
inline constexpr std::size_t kSigmaY = 5;
inline constexpr std::size_t kSigmaZ = 6;
inline constexpr std::size_t kRho = 7;
}  // namespace raw

struct TargetPoint {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

struct Component {
  double weight = 1.0;
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> sigma{1.0, 1.0, 1.0};
  double rho = 0.0;
};

struct Mixture {
  std::vector<Component> components;

  /// Throws DomainError unless weights sum to 1 (1e-9), sigmas > 0, |rho| < 1.
  void validate() const;

  /// Weighted mean over components.
  std::array<double, 3> mean() const;

  /// Pushes every component through p -> shift + scale * p (per axis, scale > 0).
  Mixture affine(const std::array<double, 3>& shift, const std::array<double, 3>& scale) const;
};

/// Applies the normalizers: mu = mu~, w = softmax(w~), sigma = exp(clamp(s~)),
/// rho = tanh(clamp(rho~)). raw.size() must be a positive multiple of 8.
Mixture normalize(std::span<const double> raw);

/// Per-component log density log N2 + log N1, without the weight.
double component_log_density(const Component& c, const TargetPoint& y);

double log_density(const Mixture& mix, const TargetPoint& y);
double density(const Mixture& mix, const TargetPoint& y);

/// Sum over timesteps of -log p(y_t). Computed with log-sum-exp.
double nll(std::span<const Mixture> mixtures, std::span<const TargetPoint> targets);

/// -log p(y) for one timestep directly from raw outputs, writing
/// d(-log p)/d(raw) into grad_raw (same length as raw).
double nll_and_raw_gradient(std::span<const double> raw, const TargetPoint& y,
                            std::span<double> grad_raw);

/// Smallest component index whose cumulative weight reaches u.
std::size_t roulette_pick(const Mixture& mix, double u);

TargetPoint sample_point(const Mixture& mix, num::SeededRng& rng);

enum class Plane { kXY, kXZ, kYZ };

const char* plane_name(Plane plane);

struct GridBounds {
  double u_min = 0.0;
  double u_max = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
};

/// Density sliced through a plane; the off-plane coordinate is held at the
/// mixture mean. values are row-major with u as the outer index.
struct DensityGrid {
  Plane plane = Plane::kXY;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> values;
  double fixed_coordinate = 0.0;

  double at(std::size_t iu, std::size_t iv) const { return values[iu * v.size() + iv]; }
  /// (u, v) of the largest grid value.
  std::array<double, 2> argmax() const;
  /// Cell area times the sum of all values.
  double riemann_sum() const;
};

DensityGrid density_grid(const Mixture& mix, Plane plane, const GridBounds& bounds,
                         std::size_t u_resolution, std::size_t v_resolution);

/// Header `u,v,density`, one row per grid point, six significant digits.
void write_density_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace hoopnet::mdn
