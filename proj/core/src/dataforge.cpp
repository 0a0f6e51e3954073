#include "hoopnet/dataforge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "hoopnet/errors.hpp"
#include "hoopnet/fileio.hpp"

namespace hoopnet::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view text, std::size_t line, const char* column) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(line, std::string("cannot parse ") + column + " '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(line, std::string(column) + " is not finite");
  }
  return value;
}

long long parse_int(std::string_view text, std::size_t line, const char* column) {
  long long value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(line, std::string("cannot parse ") + column + " '" + std::string(text) + "'");
  }
  return value;
}

void append_row(std::ostream& out, const std::string& id, std::size_t idx, const Frame& f,
                ShotLabel label) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%s\n", idx, f.x, f.y, f.z, f.clock,
                label_token(label));
  out << id << ',' << buf;
}

Frame frame_from_row(const Matrix& features, std::size_t r) {
  return {features(r, 0), features(r, 1), features(r, 2), features(r, 3)};
}

}  // namespace

std::array<std::array<double, 3>, 2> CourtSpec::rim_centers() const {
  const double mid = width_ft / 2.0;
  return {{{rim_from_baseline_ft, mid, rim_height_ft},
           {length_ft - rim_from_baseline_ft, mid, rim_height_ft}}};
}

void CourtSpec::validate() const {
  if (!(length_ft > 0.0 && width_ft > 0.0)) throw DomainError("court dimensions must be positive");
  if (!(rim_radius_ft > ball_radius_ft && ball_radius_ft > 0.0)) {
    throw DomainError("rim radius must exceed ball radius");
  }
  if (!(rim_from_baseline_ft > 0.0 && 2.0 * rim_from_baseline_ft < length_ft)) {
    throw DomainError("rim position lies outside the court");
  }
}

const char* label_token(ShotLabel label) { return label == ShotLabel::kHit ? "hit" : "miss"; }

std::vector<RawShot> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("CSV is empty; expected header: " + std::string(kCsvHeader));
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw SchemaError("unexpected CSV header '" + line + "', expected '" + kCsvHeader + "'");
  }

  struct Pending {
    RawShot shot;
    std::vector<long long> indices;
    std::size_t first_line = 0;
  };
  std::vector<Pending> shots;
  std::unordered_map<std::string, std::size_t> by_id;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw ParseError(line_no, "expected 7 fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(line_no, "empty shot_id");
    const long long idx = parse_int(fields[1], line_no, "frame_idx");
    Frame f;
    f.x = parse_double(fields[2], line_no, "x_ft");
    f.y = parse_double(fields[3], line_no, "y_ft");
    f.z = parse_double(fields[4], line_no, "z_ft");
    f.clock = parse_double(fields[5], line_no, "game_clock_s");
    ShotLabel label;
    if (fields[6] == "hit") {
      label = ShotLabel::kHit;
    } else if (fields[6] == "miss") {
      label = ShotLabel::kMiss;
    } else {
      throw SchemaError("line " + std::to_string(line_no) + ": unknown label '" +
                        std::string(fields[6]) + "' (expected hit or miss)");
    }

    const std::string id(fields[0]);
    auto [it, inserted] = by_id.try_emplace(id, shots.size());
    if (inserted) {
      Pending p;
      p.shot.shot_id = id;
      p.shot.label = label;
      p.first_line = line_no;
      shots.push_back(std::move(p));
    }
    Pending& p = shots[it->second];
    if (p.shot.label != label) {
      throw SchemaError("line " + std::to_string(line_no) + ": shot " + id + " has mixed labels");
    }
    p.shot.frames.push_back(f);
    p.indices.push_back(idx);
  }

  std::vector<RawShot> out;
  out.reserve(shots.size());
  for (auto& p : shots) {
    std::vector<std::size_t> order(p.indices.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p.indices[a] < p.indices[b]; });
    RawShot shot;
    shot.shot_id = p.shot.shot_id;
    shot.label = p.shot.label;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k > 0 && p.indices[order[k]] == p.indices[order[k - 1]]) {
        throw SchemaError("shot " + shot.shot_id + " repeats frame_idx " +
                          std::to_string(p.indices[order[k]]));
      }
      shot.frames.push_back(p.shot.frames[order[k]]);
    }
    for (std::size_t k = 1; k < shot.frames.size(); ++k) {
      if (shot.frames[k].clock > shot.frames[k - 1].clock) {
        throw SchemaError("shot " + shot.shot_id + ": game clock increases between frames");
      }
    }
    out.push_back(std::move(shot));
  }
  return out;
}

std::vector<RawShot> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, std::span<const RawShot> shots) {
  out << kCsvHeader << '\n';
  for (const auto& shot : shots) {
    for (std::size_t k = 0; k < shot.frames.size(); ++k) {
      append_row(out, shot.shot_id, k, shot.frames[k], shot.label);
    }
  }
}

void save_csv(const std::filesystem::path& path, std::span<const RawShot> shots) {
  write_file_atomically(path, [&](std::ostream& out) { write_csv(out, shots); });
}

void write_sequences_csv(std::ostream& out, std::span<const ShotSequence> sequences) {
  out << kCsvHeader << '\n';
  for (const auto& seq : sequences) {
    const auto label = seq.label == 1 ? ShotLabel::kHit : ShotLabel::kMiss;
    for (std::size_t r = 0; r < seq.features.rows(); ++r) {
      append_row(out, seq.shot_id, r, frame_from_row(seq.features, r), label);
    }
  }
}

RawShot rim_relative(const RawShot& shot, const CourtSpec& court) {
  RawShot out = shot;
  if (shot.frames.empty()) return out;
  const auto rims = court.rim_centers();
  const Frame& last = shot.frames.back();
  const auto dist2 = [&](const std::array<double, 3>& r) {
    const double dx = last.x - r[0], dy = last.y - r[1], dz = last.z - r[2];
    return dx * dx + dy * dy + dz * dz;
  };
  const auto& rim = dist2(rims[0]) <= dist2(rims[1]) ? rims[0] : rims[1];
  for (auto& f : out.frames) {
    f.x -= rim[0];
    f.y -= rim[1];
    f.z -= rim[2];
  }
  return out;
}

double rim_distance(const Frame& f) { return std::sqrt(f.x * f.x + f.y * f.y + f.z * f.z); }

std::optional<ShotSequence> truncate(const RawShot& shot, std::size_t length) {
  if (shot.frames.size() < length || length == 0) return std::nullopt;
  ShotSequence seq;
  seq.shot_id = shot.shot_id;
  seq.label = shot.label == ShotLabel::kHit ? 1 : 0;
  seq.features = Matrix(length, kFeatureCount);
  const std::size_t first = shot.frames.size() - length;
  for (std::size_t r = 0; r < length; ++r) {
    const Frame& f = shot.frames[first + r];
    seq.features(r, 0) = f.x;
    seq.features(r, 1) = f.y;
    seq.features(r, 2) = f.z;
    seq.features(r, 3) = f.clock;
  }
  return seq;
}

std::optional<ShotSequence> cutoff_at_distance(const RawShot& shot, double cutoff_ft,
                                               std::size_t length) {
  if (!(cutoff_ft > 0.0)) return truncate(shot, length);
  std::size_t keep = shot.frames.size();
  while (keep > 0 && rim_distance(shot.frames[keep - 1]) < cutoff_ft) --keep;
  RawShot clipped;
  clipped.shot_id = shot.shot_id;
  clipped.label = shot.label;
  clipped.frames.assign(shot.frames.begin(),
                        shot.frames.begin() + static_cast<std::ptrdiff_t>(keep));
  auto seq = truncate(clipped, length);
  if (seq) seq->cutoff_distance_ft = cutoff_ft;
  return seq;
}

std::vector<ShotSequence> prepare_sequences(std::span<const RawShot> shots, const CourtSpec& court,
                                            double cutoff_ft, PrepStats* stats) {
  std::vector<ShotSequence> out;
  PrepStats local;
  local.input_shots = shots.size();
  for (const auto& shot : shots) {
    auto seq = cutoff_at_distance(rim_relative(shot, court), cutoff_ft);
    if (seq) {
      out.push_back(std::move(*seq));
    } else {
      ++local.dropped;
    }
  }
  local.kept = out.size();
  if (stats != nullptr) *stats = local;
  return out;
}

SplitIndex pareto_split(std::span<const std::string> ids, std::uint64_t seed,
                        double train_fraction) {
  if (ids.size() < 2) throw DomainError("pareto_split needs at least 2 ids");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("train fraction must lie in (0, 1)");
  }
  std::vector<std::string> shuffled(ids.begin(), ids.end());
  num::SeededRng rng = num::SeededRng(seed).split(num::Stream::kShuffle);
  rng.shuffle(shuffled);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  SplitIndex split;
  split.train_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  return split;
}

FeatureScaler FeatureScaler::fit(std::span<const ShotSequence> train) {
  if (train.empty()) throw DomainError("standardize needs a non-empty training set");
  FeatureScaler s;
  std::array<double, kFeatureCount> sum{}, sum_sq{};
  std::array<double, 3> osum{}, osum_sq{};
  std::size_t frames = 0, offsets = 0;
  for (const auto& seq : train) {
    const Matrix& f = seq.features;
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t k = 0; k < kFeatureCount; ++k) sum[k] += f(r, k);
      ++frames;
      if (r + 1 < f.rows()) {
        for (std::size_t k = 0; k < 3; ++k) osum[k] += f(r + 1, k) - f(r, k);
        ++offsets;
      }
    }
  }
  for (std::size_t k = 0; k < kFeatureCount; ++k) s.mean[k] = sum[k] / static_cast<double>(frames);
  for (std::size_t k = 0; k < 3; ++k) {
    s.offset_mean[k] = offsets == 0 ? 0.0 : osum[k] / static_cast<double>(offsets);
  }
  // Second pass about the mean for accuracy.
  for (const auto& seq : train) {
    const Matrix& f = seq.features;
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        const double d = f(r, k) - s.mean[k];
        sum_sq[k] += d * d;
      }
      if (r + 1 < f.rows()) {
        for (std::size_t k = 0; k < 3; ++k) {
          const double d = f(r + 1, k) - f(r, k) - s.offset_mean[k];
          osum_sq[k] += d * d;
        }
      }
    }
  }
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const double sd = std::sqrt(sum_sq[k] / static_cast<double>(frames));
    s.std[k] = sd > 0.0 ? sd : 1.0;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double sd = offsets == 0 ? 0.0 : std::sqrt(osum_sq[k] / static_cast<double>(offsets));
    s.offset_std[k] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix FeatureScaler::scale_features(const Matrix& raw) const {
  if (raw.cols() != kFeatureCount) throw ShapeError("scale_features expects 4 columns");
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) out(r, k) = (raw(r, k) - mean[k]) / std[k];
  }
  return out;
}

Matrix FeatureScaler::scaled_offsets(const Matrix& raw) const {
  if (raw.cols() != kFeatureCount || raw.rows() < 2) {
    throw ShapeError("scaled_offsets expects at least 2 rows of 4 features");
  }
  Matrix out(raw.rows() - 1, 3);
  for (std::size_t r = 0; r + 1 < raw.rows(); ++r) {
    for (std::size_t k = 0; k < 3; ++k) {
      out(r, k) = (raw(r + 1, k) - raw(r, k) - offset_mean[k]) / offset_std[k];
    }
  }
  return out;
}

std::array<double, 3> FeatureScaler::unscale_offset(const std::array<double, 3>& scaled) const {
  return {offset_mean[0] + offset_std[0] * scaled[0], offset_mean[1] + offset_std[1] * scaled[1],
          offset_mean[2] + offset_std[2] * scaled[2]};
}

std::pair<std::vector<ShotSequence>, FeatureScaler> standardize(
    std::span<const ShotSequence> train, std::span<const ShotSequence> apply_to) {
  const FeatureScaler scaler = FeatureScaler::fit(train);
  std::vector<ShotSequence> out(apply_to.begin(), apply_to.end());
  for (auto& seq : out) seq.features = scaler.scale_features(seq.features);
  return {std::move(out), scaler};
}

namespace {

template <std::size_t N>
void write_array(std::ostream& out, const char* key, const std::array<double, N>& values) {
  out << key << " =";
  char buf[40];
  for (std::size_t k = 0; k < N; ++k) {
    std::snprintf(buf, sizeof buf, "%s%.17g", k == 0 ? " " : ",", values[k]);
    out << buf;
  }
  out << '\n';
}

template <std::size_t N>
std::array<double, N> parse_array(std::string_view text, std::size_t line, const char* key) {
  const auto fields = split_fields(text);
  if (fields.size() != N) {
    throw ParseError(line, std::string(key) + " needs " + std::to_string(N) + " values");
  }
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = parse_double(fields[k], line, key);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_scaler(std::ostream& out, const FeatureScaler& scaler) {
  write_array(out, "feature_mean", scaler.mean);
  write_array(out, "feature_std", scaler.std);
  write_array(out, "offset_mean", scaler.offset_mean);
  write_array(out, "offset_std", scaler.offset_std);
}

FeatureScaler read_scaler(std::istream& in) {
  FeatureScaler s;
  std::string raw;
  std::size_t line = 0;
  int seen = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected key = value");
    const std::string_view key = trim(text.substr(0, eq));
    const std::string_view value = trim(text.substr(eq + 1));
    if (key == "feature_mean") {
      s.mean = parse_array<kFeatureCount>(value, line, "feature_mean");
    } else if (key == "feature_std") {
      s.std = parse_array<kFeatureCount>(value, line, "feature_std");
    } else if (key == "offset_mean") {
      s.offset_mean = parse_array<3>(value, line, "offset_mean");
    } else if (key == "offset_std") {
      s.offset_std = parse_array<3>(value, line, "offset_std");
    } else {
      throw SchemaError("scaler file: unknown key '" + std::string(key) + "'");
    }
    ++seen;
  }
  if (seen != 4) throw SchemaError("scaler file: expected 4 entries, found " + std::to_string(seen));
  for (double v : s.std) {
    if (!(v > 0.0)) throw SchemaError("scaler file: feature_std must be positive");
  }
  for (double v : s.offset_std) {
    if (!(v > 0.0)) throw SchemaError("scaler file: offset_std must be positive");
  }
  return s;
}

}  // namespace hoopnet::data
