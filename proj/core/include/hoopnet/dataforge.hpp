#pragma once

// Shot data: CSV ingestion, rim-relative transform, fixed-length windows,
// distance cutoffs, train/test split, standardization, and a projectile
// simulator with an exact make/miss oracle.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoopnet/numcore.hpp"

namespace hoopnet::data {

using num::Matrix;

inline constexpr std::size_t kSequenceLength = 12;
inline constexpr std::size_t kFeatureCount = 4;  // x, y, z, game clock
inline constexpr double kSampleRateHz = 25.0;
inline constexpr double kGravityFtPerS2 = 32.174;
inline constexpr const char* kCsvHeader = "shot_id,frame_idx,x_ft,y_ft,z_ft,game_clock_s,label";

/// Court geometry in feet. x runs along the court length, y across it.
struct CourtSpec {
  double length_ft = 94.0;
  double width_ft = 50.0;
  double rim_from_baseline_ft = 5.25;
  double rim_height_ft = 10.0;
  double rim_radius_ft = 0.75;
  double ball_radius_ft = 0.39;

  /// Centers of the two rims, (x, y, z).
  std::array<std::array<double, 3>, 2> rim_centers() const;
  void validate() const;
};

enum class ShotLabel { kMiss = 0, kHit = 1 };

const char* label_token(ShotLabel label);

struct Frame {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double clock = 0.0;  // game clock, seconds remaining
};

struct RawShot {
  std::string shot_id;
  std::vector<Frame> frames;
  ShotLabel label = ShotLabel::kMiss;
};

/// A fixed-length window of frames. Features are rim-relative feet plus the
/// clock until standardize() rescales them.
struct ShotSequence {
  std::string shot_id;
  Matrix features;  // kSequenceLength x kFeatureCount
  int label = 0;
  std::optional<double> cutoff_distance_ft;
};

// --- CSV ------------------------------------------------------------------

std::vector<RawShot> read_csv(std::istream& in);
std::vector<RawShot> load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, std::span<const RawShot> shots);
void save_csv(const std::filesystem::path& path, std::span<const RawShot> shots);

/// Writes fixed-length sequences in the same schema (features as x, y, z, clock).
void write_sequences_csv(std::ostream& out, std::span<const ShotSequence> sequences);

// --- Preprocessing --------------------------------------------------------

/// Translates a shot so the rim nearest its final frame is the origin.
RawShot rim_relative(const RawShot& shot, const CourtSpec& court);

/// Keeps the last `length` frames; shots with fewer frames are dropped.
std::optional<ShotSequence> truncate(const RawShot& shot, std::size_t length = kSequenceLength);

/// Strips trailing frames closer than cutoff_ft (3-D distance to the origin)
/// and then applies truncate(). The shot must already be rim-relative.
std::optional<ShotSequence> cutoff_at_distance(const RawShot& shot, double cutoff_ft,
                                               std::size_t length = kSequenceLength);

double rim_distance(const Frame& f);

struct PrepStats {
  std::size_t input_shots = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  double drop_fraction() const {
    return input_shots == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(input_shots);
  }
};

/// rim_relative + cutoff_at_distance over a whole dataset.
std::vector<ShotSequence> prepare_sequences(std::span<const RawShot> shots, const CourtSpec& court,
                                            double cutoff_ft, PrepStats* stats = nullptr);

// --- Split and scaling ----------------------------------------------------

struct SplitIndex {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Seeded uniform shuffle, first 80% (rounded) to train.
SplitIndex pareto_split(std::span<const std::string> ids, std::uint64_t seed,
                        double train_fraction = 0.8);

/// Per-feature z-score statistics fitted on training data only. Offsets are
/// the per-step (dx, dy, dz) differences in feet used as mixture targets.
struct FeatureScaler {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> std{1.0, 1.0, 1.0, 1.0};
  std::array<double, 3> offset_mean{};
  std::array<double, 3> offset_std{1.0, 1.0, 1.0};

  static FeatureScaler fit(std::span<const ShotSequence> train);

  Matrix scale_features(const Matrix& raw) const;
  /// Offsets between consecutive frames of raw features, standardized.
  Matrix scaled_offsets(const Matrix& raw) const;
  std::array<double, 3> unscale_offset(const std::array<double, 3>& scaled) const;

  bool operator==(const FeatureScaler&) const = default;
};

/// Plain `key = value` text; doubles round-trip exactly.
void write_scaler(std::ostream& out, const FeatureScaler& scaler);
FeatureScaler read_scaler(std::istream& in);

/// Scales apply_to with statistics fitted on train.
std::pair<std::vector<ShotSequence>, FeatureScaler> standardize(
    std::span<const ShotSequence> train, std::span<const ShotSequence> apply_to);

// --- Synthetic shots ------------------------------------------------------

template <typename T>
struct Range {
  T lo;
  T hi;
};

struct SynthConfig {
  std::size_t n_shots = 5000;
  Range<double> release_distance_ft{22.0, 26.0};
  Range<double> release_height_ft{7.0, 9.0};
  /// Shooter bearing around the rim, degrees from the court's long axis.
  Range<double> release_bearing_deg{-70.0, 70.0};
  Range<double> launch_angle_deg{45.0, 55.0};
  /// Relative error of launch speed against the speed that would reach the rim center.
  double speed_error_rel_std = 0.0085;
  /// Side-to-side aiming error.
  double azimuth_error_deg_std = 0.9;
  double noise_std_ft = 0.1;
  Range<double> start_clock_s{1.0, 720.0};
  std::uint64_t seed = 20151027;
};

/// Closed-form launch state of one shot (court coordinates, feet, seconds).
struct LaunchParams {
  std::array<double, 3> position{};
  std::array<double, 3> velocity{};
  double start_clock = 0.0;
  std::size_t rim_index = 0;
};

struct SynthShot {
  RawShot shot;
  LaunchParams launch;
};

/// Noiseless position at time t after release.
std::array<double, 3> position_at(const LaunchParams& launch, double t);

/// Time of the descending crossing of the rim plane, if any.
std::optional<double> rim_plane_crossing_time(const LaunchParams& launch, const CourtSpec& court);

/// Hit iff the descending rim-plane crossing lies within rim_radius − ball_radius
/// of the rim center (boundary counts as a hit).
ShotLabel oracle_hit(const LaunchParams& launch, const CourtSpec& court);

std::vector<SynthShot> synth_generate_detailed(const SynthConfig& cfg, const CourtSpec& court);
std::vector<RawShot> synth_generate(const SynthConfig& cfg, const CourtSpec& court);

/// Frames at 25 Hz from release until the rim-plane crossing or the floor.
std::vector<Frame> sample_frames(const LaunchParams& launch, const CourtSpec& court);

}  // namespace hoopnet::data
