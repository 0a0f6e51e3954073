#include "hoopnet/generate.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "hoopnet/errors.hpp"

namespace hoopnet::gen {
namespace {

constexpr mdn::Plane kPlanes[] = {mdn::Plane::kXY, mdn::Plane::kXZ, mdn::Plane::kYZ};

num::Matrix prefix_features(std::span<const data::Frame> prefix) {
  num::Matrix raw(prefix.size(), data::kFeatureCount);
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    raw(t, 0) = prefix[t].x;
    raw(t, 1) = prefix[t].y;
    raw(t, 2) = prefix[t].z;
    raw(t, 3) = prefix[t].clock;
  }
  return raw;
}

}  // namespace

mdn::Mixture next_point_mixture(const seq::ModelParams& model, const data::FeatureScaler& scaler,
                                std::span<const data::Frame> prefix,
                                std::optional<double> force_sigma_raw) {
  if (prefix.size() < 2) throw DomainError("generation needs a prefix of at least 2 frames");
  const auto result = seq::forward_sequence(model, scaler.scale_features(prefix_features(prefix)));
  mdn::Mixture offset = mdn::normalize(result.mixture_raw.row(prefix.size() - 1));
  if (force_sigma_raw) {
    const double sigma = std::exp(*force_sigma_raw);
    for (auto& c : offset.components) c.sigma = {sigma, sigma, sigma};
  }
  const data::Frame& last = prefix.back();
  const std::array<double, 3> shift = {last.x + scaler.offset_mean[0], last.y + scaler.offset_mean[1],
                                       last.z + scaler.offset_mean[2]};
  return offset.affine(shift, scaler.offset_std);
}

mdn::DensityGrid centred_grid(const mdn::Mixture& position, mdn::Plane plane,
                              std::size_t resolution, double half_width_ft) {
  const auto mean = position.mean();
  std::size_t a = 0, b = 1;
  if (plane == mdn::Plane::kXZ) b = 2;
  if (plane == mdn::Plane::kYZ) a = 1, b = 2;
  const mdn::GridBounds bounds{mean[a] - half_width_ft, mean[a] + half_width_ft,
                               mean[b] - half_width_ft, mean[b] + half_width_ft};
  return mdn::density_grid(position, plane, bounds, resolution, resolution);
}

std::array<double, 3> grid_mode(const mdn::Mixture& position, std::size_t resolution,
                                double half_width_ft) {
  const auto xy = centred_grid(position, mdn::Plane::kXY, resolution, half_width_ft).argmax();
  const auto xz = centred_grid(position, mdn::Plane::kXZ, resolution, half_width_ft).argmax();
  return {xy[0], xy[1], xz[1]};
}

GenerationResult generate(const seq::ModelParams& model, const data::FeatureScaler& scaler,
                          std::span<const data::Frame> prefix, const GenerateOptions& options) {
  if (prefix.size() < 2) throw DomainError("generation needs a prefix of at least 2 frames");
  if (options.branch_factor < 1 || options.steps < 1) {
    throw DomainError("branch factor and steps must be >= 1");
  }
  if (!(options.grid_half_width_ft > 0.0)) throw DomainError("grid half width must be positive");
  num::SeededRng rng = num::SeededRng(options.seed).split(num::Stream::kSampling);
  const double dt = 1.0 / data::kSampleRateHz;

  GenerationResult out;
  std::vector<std::vector<data::Frame>> live{std::vector<data::Frame>(prefix.begin(), prefix.end())};
  for (std::size_t step = 1; step <= options.steps; ++step) {
    std::vector<std::vector<data::Frame>> next;
    next.reserve(live.size() * options.branch_factor);
    for (std::size_t node = 0; node < live.size(); ++node) {
      const auto& path = live[node];
      const mdn::Mixture position = next_point_mixture(model, scaler, path, options.force_sigma_raw);
      for (const mdn::Plane plane : kPlanes) {
        out.densities.push_back({step, node,
                                 centred_grid(position, plane, options.grid_resolution,
                                              options.grid_half_width_ft)});
      }
      for (std::size_t k = 0; k < options.branch_factor; ++k) {
        const mdn::TargetPoint p = mdn::sample_point(position, rng);
        auto child = path;
        child.push_back({p.dx, p.dy, p.dz, path.back().clock - dt});
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
  }
  for (std::size_t b = 0; b < live.size(); ++b) {
    out.trajectories.push_back({b, prefix.size(), std::move(live[b])});
  }
  return out;
}

void write_trajectories_csv(std::ostream& out, const GenerationResult& result) {
  out << "branch_id,frame_idx,x_ft,y_ft,z_ft,game_clock_s,source\n";
  char buf[192];
  for (const auto& t : result.trajectories) {
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
      const auto& f = t.frames[i];
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%s\n", t.branch_id, i, f.x, f.y, f.z,
                    f.clock, i < t.observed ? "observed" : "generated");
      out << buf;
    }
  }
}

}  // namespace hoopnet::gen
