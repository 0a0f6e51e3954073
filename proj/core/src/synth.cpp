// Drag-free projectile shots sampled at 25 Hz.

#include <cmath>
#include <cstdio>
#include <numbers>

#include "hoopnet/dataforge.hpp"
#include "hoopnet/errors.hpp"

namespace hoopnet::data {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Court-boundary slack for accepting a synthetic frame.
constexpr double kCourtMarginFt = 10.0;

void check_range(const Range<double>& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw DomainError(std::string("synth config: empty range for ") + name);
  }
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_shots < 1) throw DomainError("synth config: n_shots must be >= 1");
  check_range(cfg.release_distance_ft, "release distance");
  check_range(cfg.release_height_ft, "release height");
  check_range(cfg.release_bearing_deg, "release bearing");
  check_range(cfg.launch_angle_deg, "launch angle");
  check_range(cfg.start_clock_s, "start clock");
  if (!(cfg.noise_std_ft >= 0.0)) throw DomainError("synth config: noise std must be >= 0");
  if (!(cfg.speed_error_rel_std >= 0.0) || !(cfg.azimuth_error_deg_std >= 0.0)) {
    throw DomainError("synth config: launch error spreads must be >= 0");
  }
}

bool inside_court(const Frame& f, const CourtSpec& court) {
  return f.x >= -kCourtMarginFt && f.x <= court.length_ft + kCourtMarginFt &&
         f.y >= -kCourtMarginFt && f.y <= court.width_ft + kCourtMarginFt && f.z >= -kCourtMarginFt;
}

std::string synth_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%06zu", index + 1);
  return buf;
}

}  // namespace

std::array<double, 3> position_at(const LaunchParams& launch, double t) {
  return {launch.position[0] + launch.velocity[0] * t, launch.position[1] + launch.velocity[1] * t,
          launch.position[2] + launch.velocity[2] * t - 0.5 * kGravityFtPerS2 * t * t};
}

std::optional<double> rim_plane_crossing_time(const LaunchParams& launch, const CourtSpec& court) {
  // z0 + vz t - g t^2 / 2 = rim height; the larger root is the descending crossing.
  const double vz = launch.velocity[2];
  const double rise = court.rim_height_ft - launch.position[2];
  const double disc = vz * vz - 2.0 * kGravityFtPerS2 * rise;
  if (disc < 0.0) return std::nullopt;
  const double t = (vz + std::sqrt(disc)) / kGravityFtPerS2;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

ShotLabel oracle_hit(const LaunchParams& launch, const CourtSpec& court) {
  const auto t = rim_plane_crossing_time(launch, court);
  if (!t) return ShotLabel::kMiss;
  const auto p = position_at(launch, *t);
  const auto& rim = court.rim_centers()[launch.rim_index];
  const double offset = std::hypot(p[0] - rim[0], p[1] - rim[1]);
  // Closed boundary; the slack absorbs rounding in the crossing time.
  const double limit = court.rim_radius_ft - court.ball_radius_ft;
  return offset <= limit + 1e-9 ? ShotLabel::kHit : ShotLabel::kMiss;
}

std::vector<Frame> sample_frames(const LaunchParams& launch, const CourtSpec& court) {
  double t_end = 0.0;
  if (const auto cross = rim_plane_crossing_time(launch, court)) {
    t_end = *cross;
  } else {
    // Never reaches the rim plane on the way down: follow it to the floor.
    const double vz = launch.velocity[2];
    const double z0 = launch.position[2];
    t_end = (vz + std::sqrt(vz * vz + 2.0 * kGravityFtPerS2 * z0)) / kGravityFtPerS2;
  }
  std::vector<Frame> frames;
  const double dt = 1.0 / kSampleRateHz;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > t_end + 1e-12) break;
    const auto p = position_at(launch, t);
    frames.push_back({p[0], p[1], p[2], launch.start_clock - t});
  }
  return frames;
}

std::vector<SynthShot> synth_generate_detailed(const SynthConfig& cfg, const CourtSpec& court) {
  validate(cfg);
  court.validate();
  const num::SeededRng root(cfg.seed);
  const num::SeededRng launch_root = root.split(num::Stream::kData);
  const num::SeededRng noise_root = root.split(num::Stream::kNoise);
  const auto rims = court.rim_centers();

  std::vector<SynthShot> out;
  out.reserve(cfg.n_shots);
  for (std::size_t i = 0; i < cfg.n_shots; ++i) {
    num::SeededRng rng = launch_root.split(i);
    LaunchParams launch;
    launch.rim_index = rng.uniform() < 0.5 ? 0 : 1;
    const auto& rim = rims[launch.rim_index];
    const double into_court = launch.rim_index == 0 ? 1.0 : -1.0;

    const double distance = rng.uniform(cfg.release_distance_ft.lo, cfg.release_distance_ft.hi);
    const double bearing = rng.uniform(cfg.release_bearing_deg.lo, cfg.release_bearing_deg.hi) * kDegToRad;
    const double height = rng.uniform(cfg.release_height_ft.lo, cfg.release_height_ft.hi);
    const double angle = rng.uniform(cfg.launch_angle_deg.lo, cfg.launch_angle_deg.hi) * kDegToRad;
    launch.start_clock = rng.uniform(cfg.start_clock_s.lo, cfg.start_clock_s.hi);

    launch.position = {rim[0] + into_court * distance * std::cos(bearing),
                       rim[1] + distance * std::sin(bearing), height};

    // Speed that carries the ball through the rim center at this launch angle.
    const double rise = court.rim_height_ft - height;
    const double denom = 2.0 * std::cos(angle) * std::cos(angle) * (distance * std::tan(angle) - rise);
    if (!(denom > 0.0)) continue;
    const double ideal_speed = std::sqrt(kGravityFtPerS2 * distance * distance / denom);
    const double speed = ideal_speed * (1.0 + cfg.speed_error_rel_std * rng.normal());
    const double heading = std::atan2(rim[1] - launch.position[1], rim[0] - launch.position[0]) +
                           cfg.azimuth_error_deg_std * kDegToRad * rng.normal();
    const double horizontal = speed * std::cos(angle);
    launch.velocity = {horizontal * std::cos(heading), horizontal * std::sin(heading),
                       speed * std::sin(angle)};

    SynthShot s;
    s.launch = launch;
    s.shot.shot_id = synth_id(i);
    s.shot.label = oracle_hit(launch, court);
    s.shot.frames = sample_frames(launch, court);

    num::SeededRng noise = noise_root.split(i);
    bool valid = s.shot.frames.size() >= 2;
    for (auto& f : s.shot.frames) {
      if (cfg.noise_std_ft > 0.0) {
        f.x += cfg.noise_std_ft * noise.normal();
        f.y += cfg.noise_std_ft * noise.normal();
        f.z += cfg.noise_std_ft * noise.normal();
      }
      valid = valid && inside_court(f, court);
    }
    if (valid) out.push_back(std::move(s));
  }
  if (out.empty()) throw GenerationError("synthetic configuration produced no valid shots");
  return out;
}

std::vector<RawShot> synth_generate(const SynthConfig& cfg, const CourtSpec& court) {
  auto detailed = synth_generate_detailed(cfg, court);
  std::vector<RawShot> shots;
  shots.reserve(detailed.size());
  for (auto& s : detailed) shots.push_back(std::move(s.shot));
  return shots;
}

}  // namespace hoopnet::data
