#include "hoopnet/mixhead.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "hoopnet/errors.hpp"

namespace hoopnet::mdn {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;  // ln(2π)

std::size_t component_count(std::span<const double> raw) {
  if (raw.empty() || raw.size() % kRawPerComponent != 0) {
    throw ShapeError("raw mixture width " + std::to_string(raw.size()) +
                     " is not a positive multiple of 8");
  }
  return raw.size() / kRawPerComponent;
}

double log_sum_exp(std::span<const double> xs) {
  const double top = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - top);
  return top + std::log(acc);
}

}  // namespace

void Mixture::validate() const {
  if (components.empty()) throw DomainError("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw DomainError("mixture weight is negative or NaN");
    for (double s : c.sigma) {
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("mixture sigma must be positive");
    }
    for (double m : c.mean) {
      if (!std::isfinite(m)) throw DomainError("mixture mean is not finite");
    }
    if (!(std::abs(c.rho) < 1.0)) throw DomainError("mixture correlation must satisfy |rho| < 1");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("mixture weights do not sum to 1");
}

std::array<double, 3> Mixture::mean() const {
  std::array<double, 3> m{0.0, 0.0, 0.0};
  for (const auto& c : components) {
    for (std::size_t k = 0; k < 3; ++k) m[k] += c.weight * c.mean[k];
  }
  return m;
}

Mixture Mixture::affine(const std::array<double, 3>& shift,
                        const std::array<double, 3>& scale) const {
  Mixture out = *this;
  for (auto& c : out.components) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (!(scale[k] > 0.0)) throw DomainError("Mixture::affine needs positive scales");
      c.mean[k] = shift[k] + scale[k] * c.mean[k];
      c.sigma[k] *= scale[k];
    }
  }
  return out;
}

Mixture normalize(std::span<const double> raw) {
  const std::size_t n = component_count(raw);
  for (double v : raw) {
    if (!std::isfinite(v)) throw DomainError("normalize: raw mixture output is not finite");
  }
  Mixture mix;
  mix.components.resize(n);

  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) top = std::max(top, raw[c * kRawPerComponent + raw::kWeight]);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const auto r = raw.subspan(c * kRawPerComponent, kRawPerComponent);
    auto& comp = mix.components[c];
    comp.weight = std::exp(r[raw::kWeight] - top);
    total += comp.weight;
    comp.mean = {r[raw::kMuX], r[raw::kMuY], r[raw::kMuZ]};
    for (std::size_t k = 0; k < 3; ++k) {
      comp.sigma[k] = std::exp(std::clamp(r[raw::kSigmaX + k], kSigmaRawMin, kSigmaRawMax));
    }
    comp.rho = std::tanh(std::clamp(r[raw::kRho], kRhoRawMin, kRhoRawMax));
  }
  for (auto& comp : mix.components) comp.weight /= total;
  return mix;
}

double component_log_density(const Component& c, const TargetPoint& y) {
  const double zx = (y.dx - c.mean[0]) / c.sigma[0];
  const double zy = (y.dy - c.mean[1]) / c.sigma[1];
  const double zz = (y.dz - c.mean[2]) / c.sigma[2];
  const double one_minus_rho2 = 1.0 - c.rho * c.rho;
  const double quad = zx * zx + zy * zy - 2.0 * c.rho * zx * zy;
  const double log_n2 = -kLogTwoPi - std::log(c.sigma[0]) - std::log(c.sigma[1]) -
                        0.5 * std::log(one_minus_rho2) - quad / (2.0 * one_minus_rho2);
  const double log_n1 = -0.5 * kLogTwoPi - std::log(c.sigma[2]) - 0.5 * zz * zz;
  return log_n2 + log_n1;
}

double log_density(const Mixture& mix, const TargetPoint& y) {
  mix.validate();
  std::vector<double> terms;
  terms.reserve(mix.components.size());
  for (const auto& c : mix.components) {
    if (c.weight > 0.0) terms.push_back(std::log(c.weight) + component_log_density(c, y));
  }
  return log_sum_exp(terms);
}

double density(const Mixture& mix, const TargetPoint& y) { return std::exp(log_density(mix, y)); }

double nll(std::span<const Mixture> mixtures, std::span<const TargetPoint> targets) {
  if (mixtures.size() != targets.size()) {
    throw ShapeError("nll: " + std::to_string(mixtures.size()) + " mixtures vs " +
                     std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < mixtures.size(); ++t) total -= log_density(mixtures[t], targets[t]);
  return total;
}

double nll_and_raw_gradient(std::span<const double> raw, const TargetPoint& y,
                            std::span<double> grad_raw) {
  const std::size_t n = component_count(raw);
  if (grad_raw.size() != raw.size()) throw ShapeError("nll gradient buffer has wrong width");
  const Mixture mix = normalize(raw);

  std::vector<double> log_terms(n);
  for (std::size_t c = 0; c < n; ++c) {
    log_terms[c] = std::log(mix.components[c].weight) + component_log_density(mix.components[c], y);
  }
  const double log_p = log_sum_exp(log_terms);

  for (std::size_t c = 0; c < n; ++c) {
    const auto& comp = mix.components[c];
    const auto r = raw.subspan(c * kRawPerComponent, kRawPerComponent);
    auto g = grad_raw.subspan(c * kRawPerComponent, kRawPerComponent);
    const double gamma = std::exp(log_terms[c] - log_p);  // posterior responsibility

    const double zx = (y.dx - comp.mean[0]) / comp.sigma[0];
    const double zy = (y.dy - comp.mean[1]) / comp.sigma[1];
    const double zz = (y.dz - comp.mean[2]) / comp.sigma[2];
    const double rho = comp.rho;
    const double omr2 = 1.0 - rho * rho;
    const double quad = zx * zx + zy * zy - 2.0 * rho * zx * zy;

    // d log N / d (raw parameter); the loss is -log p so each term is -gamma * dlogN.
    const double dmx = (zx - rho * zy) / (comp.sigma[0] * omr2);
    const double dmy = (zy - rho * zx) / (comp.sigma[1] * omr2);
    const double dmz = zz / comp.sigma[2];
    const double dsx = -1.0 + zx * (zx - rho * zy) / omr2;
    const double dsy = -1.0 + zy * (zy - rho * zx) / omr2;
    const double dsz = -1.0 + zz * zz;
    const double drho = rho + zx * zy - rho * quad / omr2;

    const auto inside = [](double v, double lo, double hi) { return v >= lo && v <= hi ? 1.0 : 0.0; };

    g[raw::kWeight] = comp.weight - gamma;
    g[raw::kMuX] = -gamma * dmx;
    g[raw::kMuY] = -gamma * dmy;
    g[raw::kMuZ] = -gamma * dmz;
    g[raw::kSigmaX] = -gamma * dsx * inside(r[raw::kSigmaX], kSigmaRawMin, kSigmaRawMax);
    g[raw::kSigmaY] = -gamma * dsy * inside(r[raw::kSigmaY], kSigmaRawMin, kSigmaRawMax);
    g[raw::kSigmaZ] = -gamma * dsz * inside(r[raw::kSigmaZ], kSigmaRawMin, kSigmaRawMax);
    g[raw::kRho] = -gamma * drho * inside(r[raw::kRho], kRhoRawMin, kRhoRawMax);
  }
  return -log_p;
}

std::size_t roulette_pick(const Mixture& mix, double u) {
  if (mix.components.empty()) throw DomainError("roulette_pick on empty mixture");
  double cumulative = 0.0;
  for (std::size_t c = 0; c < mix.components.size(); ++c) {
    const double w = mix.components[c].weight;
    cumulative += w;
    if (w > 0.0 && cumulative >= u) return c;
  }
  // Rounding left the total just below u; take the last weighted component.
  for (std::size_t c = mix.components.size(); c-- > 0;) {
    if (mix.components[c].weight > 0.0) return c;
  }
  return mix.components.size() - 1;
}

TargetPoint sample_point(const Mixture& mix, num::SeededRng& rng) {
  const auto& c = mix.components[roulette_pick(mix, rng.uniform())];
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double z3 = rng.normal();
  TargetPoint p;
  p.dx = c.mean[0] + c.sigma[0] * z1;
  p.dy = c.mean[1] + c.sigma[1] * (c.rho * z1 + std::sqrt(1.0 - c.rho * c.rho) * z2);
  p.dz = c.mean[2] + c.sigma[2] * z3;
  return p;
}

const char* plane_name(Plane plane) {
  switch (plane) {
    case Plane::kXY: return "xy";
    case Plane::kXZ: return "xz";
    case Plane::kYZ: return "yz";
  }
  return "?";
}

std::array<double, 2> DensityGrid::argmax() const {
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(it - values.begin());
  return {u[idx / v.size()], v[idx % v.size()]};
}

double DensityGrid::riemann_sum() const {
  const double du = (u.back() - u.front()) / static_cast<double>(u.size() - 1);
  const double dv = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
  double total = 0.0;
  for (double x : values) total += x;
  return total * du * dv;
}

DensityGrid density_grid(const Mixture& mix, Plane plane, const GridBounds& bounds,
                         std::size_t u_resolution, std::size_t v_resolution) {
  if (u_resolution < 2 || v_resolution < 2) {
    throw DomainError("density_grid needs at least 2 points per axis");
  }
  if (!(bounds.u_max > bounds.u_min) || !(bounds.v_max > bounds.v_min)) {
    throw DomainError("density_grid bounds are empty");
  }
  mix.validate();

  std::size_t iu_axis = 0, iv_axis = 1, fixed_axis = 2;
  if (plane == Plane::kXZ) {
    iv_axis = 2;
    fixed_axis = 1;
  } else if (plane == Plane::kYZ) {
    iu_axis = 1;
    iv_axis = 2;
    fixed_axis = 0;
  }

  DensityGrid grid;
  grid.plane = plane;
  grid.fixed_coordinate = mix.mean()[fixed_axis];
  grid.u.resize(u_resolution);
  grid.v.resize(v_resolution);
  for (std::size_t i = 0; i < u_resolution; ++i) {
    grid.u[i] = bounds.u_min + (bounds.u_max - bounds.u_min) * static_cast<double>(i) /
                                   static_cast<double>(u_resolution - 1);
  }
  for (std::size_t j = 0; j < v_resolution; ++j) {
    grid.v[j] = bounds.v_min + (bounds.v_max - bounds.v_min) * static_cast<double>(j) /
                                   static_cast<double>(v_resolution - 1);
  }
  grid.values.resize(u_resolution * v_resolution);
  for (std::size_t i = 0; i < u_resolution; ++i) {
    for (std::size_t j = 0; j < v_resolution; ++j) {
      std::array<double, 3> p{};
      p[iu_axis] = grid.u[i];
      p[iv_axis] = grid.v[j];
      p[fixed_axis] = grid.fixed_coordinate;
      grid.values[i * v_resolution + j] = density(mix, TargetPoint{p[0], p[1], p[2]});
    }
  }
  return grid;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
  out << "u,v,density\n";
  char buf[96];
  for (std::size_t i = 0; i < grid.u.size(); ++i) {
    for (std::size_t j = 0; j < grid.v.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g\n", grid.u[i], grid.v[j], grid.at(i, j));
      out << buf;
    }
  }
}

}  // namespace hoopnet::mdn
