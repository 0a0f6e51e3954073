#pragma once

// Branching trajectory generation from an observed prefix.
//
// The model is run on the observed frames only. Each step samples
// branch_factor offsets per live trajectory, appends them, and rescans the
// extended prefix, so steps produce branch_factor^steps trajectories.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hoopnet/dataforge.hpp"
#include "hoopnet/mixhead.hpp"
#include "hoopnet/seqnet.hpp"

namespace hoopnet::gen {

struct GenerateOptions {
  std::size_t branch_factor = 2;
  std::size_t steps = 3;
  std::size_t grid_resolution = 61;
  double grid_half_width_ft = 3.0;
  std::uint64_t seed = 1;
  /// Test hook: replaces every component's sigma by exp(value) (in scaled
  /// units) after normalization, bypassing the clamp.
  std::optional<double> force_sigma_raw;
};

struct Trajectory {
  std::size_t branch_id = 0;
  std::size_t observed = 0;          // leading frames copied from the prefix
  std::vector<data::Frame> frames;   // rim-relative feet
};

struct StepDensity {
  std::size_t step = 0;  // 1-based
  std::size_t node = 0;  // index of the parent trajectory at this step
  mdn::DensityGrid grid;
};

struct GenerationResult {
  std::vector<Trajectory> trajectories;
  std::vector<StepDensity> densities;
};

/// Mixture over the next absolute position (rim-relative feet) after a prefix.
mdn::Mixture next_point_mixture(const seq::ModelParams& model, const data::FeatureScaler& scaler,
                                std::span<const data::Frame> prefix,
                                std::optional<double> force_sigma_raw = std::nullopt);

/// Square grid of side 2 * half_width centred on the mixture mean.
mdn::DensityGrid centred_grid(const mdn::Mixture& position, mdn::Plane plane,
                              std::size_t resolution, double half_width_ft);

/// Grid mode as a 3-D point: x, y from the xy grid, z from the xz grid.
std::array<double, 3> grid_mode(const mdn::Mixture& position, std::size_t resolution,
                                double half_width_ft);

/// Throws DomainError for a prefix shorter than 2 frames or K, S < 1.
GenerationResult generate(const seq::ModelParams& model, const data::FeatureScaler& scaler,
                          std::span<const data::Frame> prefix, const GenerateOptions& options);

/// Header `branch_id,frame_idx,x_ft,y_ft,z_ft,game_clock_s,source` with source
/// `observed` or `generated`.
void write_trajectories_csv(std::ostream& out, const GenerationResult& result);

}  // namespace hoopnet::gen
