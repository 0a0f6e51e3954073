#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "hoopnet/errors.hpp"

namespace hoopnet::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? s.npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i == 0 ? "" : ",") + fmt(values[i]);
  return out;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value, const char* expected) {
  throw SchemaError("config key '" + key + "': expected " + expected + ", got '" +
                    std::string(value) + "'");
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> to_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

train::ParamRange to_range(const std::string& key, std::string_view v) {
  const auto parts = split(v, ':');
  if (parts.size() < 2) bad_value(key, v, "lo:hi[:log][:int]");
  train::ParamRange r;
  r.lo = to_double(key, parts[0]);
  r.hi = to_double(key, parts[1]);
  for (std::size_t i = 2; i < parts.size(); ++i) {
    if (parts[i] == "log") {
      r.log_scale = true;
    } else if (parts[i] == "int") {
      r.integer = true;
    } else {
      bad_value(key, v, "lo:hi[:log][:int]");
    }
  }
  return r;
}

std::string fmt_range(const train::ParamRange& r) {
  return fmt(r.lo) + ":" + fmt(r.hi) + (r.log_scale ? ":log" : "") + (r.integer ? ":int" : "");
}

struct Field {
  const char* key;
  const char* help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, std::string_view)> set;
};

#define HOOP_DOUBLE(KEY, MEMBER, HELP)                                                 \
  Field {                                                                              \
    KEY, HELP, [](const RunConfig& c) { return fmt(c.MEMBER); },                       \
        [](RunConfig& c, const std::string& k, std::string_view v) { c.MEMBER = to_double(k, v); } \
  }
#define HOOP_SIZE(KEY, MEMBER, HELP)                                                   \
  Field {                                                                              \
    KEY, HELP, [](const RunConfig& c) { return std::to_string(c.MEMBER); },            \
        [](RunConfig& c, const std::string& k, std::string_view v) {                   \
          c.MEMBER = static_cast<std::size_t>(to_u64(k, v));                           \
        }                                                                              \
  }
#define HOOP_BOOL(KEY, MEMBER, HELP)                                                   \
  Field {                                                                              \
    KEY, HELP, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& k, std::string_view v) { c.MEMBER = to_bool(k, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", "root seed for synthesis, split, init, shuffling, search and sampling",
            [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& k, std::string_view v) { c.seed = to_u64(k, v); }},
      Field{"out", "output directory",
            [](const RunConfig& c) { return c.out.string(); },
            [](RunConfig& c, const std::string&, std::string_view v) { c.out = std::string(v); }},

      HOOP_SIZE("synth.n_shots", synth.n_shots, "shots to simulate"),
      HOOP_DOUBLE("synth.release_distance_min_ft", synth.release_distance_ft.lo, "nearest release point"),
      HOOP_DOUBLE("synth.release_distance_max_ft", synth.release_distance_ft.hi, "farthest release point"),
      HOOP_DOUBLE("synth.release_height_min_ft", synth.release_height_ft.lo, "lowest release height"),
      HOOP_DOUBLE("synth.release_height_max_ft", synth.release_height_ft.hi, "highest release height"),
      HOOP_DOUBLE("synth.bearing_min_deg", synth.release_bearing_deg.lo, "shooter bearing, lower bound"),
      HOOP_DOUBLE("synth.bearing_max_deg", synth.release_bearing_deg.hi, "shooter bearing, upper bound"),
      HOOP_DOUBLE("synth.launch_angle_min_deg", synth.launch_angle_deg.lo, "launch elevation, lower bound"),
      HOOP_DOUBLE("synth.launch_angle_max_deg", synth.launch_angle_deg.hi, "launch elevation, upper bound"),
      HOOP_DOUBLE("synth.speed_error_rel_std", synth.speed_error_rel_std, "relative launch speed error"),
      HOOP_DOUBLE("synth.azimuth_error_deg_std", synth.azimuth_error_deg_std, "aiming error, degrees"),
      HOOP_DOUBLE("synth.noise_std_ft", synth.noise_std_ft, "tracking noise per coordinate"),
      HOOP_DOUBLE("synth.start_clock_min_s", synth.start_clock_s.lo, "game clock at release, lower bound"),
      HOOP_DOUBLE("synth.start_clock_max_s", synth.start_clock_s.hi, "game clock at release, upper bound"),

      HOOP_DOUBLE("court.length_ft", court.length_ft, "court length"),
      HOOP_DOUBLE("court.width_ft", court.width_ft, "court width"),
      HOOP_DOUBLE("court.rim_from_baseline_ft", court.rim_from_baseline_ft, "rim centre to baseline"),
      HOOP_DOUBLE("court.rim_height_ft", court.rim_height_ft, "rim height"),
      HOOP_DOUBLE("court.rim_radius_ft", court.rim_radius_ft, "rim radius"),
      HOOP_DOUBLE("court.ball_radius_ft", court.ball_radius_ft, "ball radius"),

      HOOP_SIZE("model.layers", model.num_layers, "stacked bidirectional layers"),
      HOOP_SIZE("model.units", model.units, "units per layer, split evenly between directions"),
      HOOP_SIZE("model.components", model.components, "mixture components"),

      Field{"train.task", "classify or generate",
            [](const RunConfig& c) { return std::string(train::task_name(c.train.task)); },
            [](RunConfig& c, const std::string& k, std::string_view v) {
              if (v == "classify") {
                c.train.task = train::Task::kClassify;
              } else if (v == "generate") {
                c.train.task = train::Task::kGenerate;
              } else {
                bad_value(k, v, "classify or generate");
              }
            }},
      HOOP_SIZE("train.epochs", train.epochs, "maximum epochs"),
      HOOP_SIZE("train.batch_size", train.batch_size, "mini-batch size"),
      HOOP_DOUBLE("train.lambda", train.lambda, "mixture NLL weight in the classify task"),
      HOOP_DOUBLE("train.lr", train.adam.lr, "Adam learning rate"),
      HOOP_DOUBLE("train.beta1", train.adam.beta1, "Adam first-moment decay"),
      HOOP_DOUBLE("train.beta2", train.adam.beta2, "Adam second-moment decay"),
      HOOP_DOUBLE("train.eps", train.adam.eps, "Adam epsilon"),
      HOOP_DOUBLE("train.clip_norm", train.clip_norm, "global gradient-norm clip, 0 disables"),
      HOOP_BOOL("train.early_stop", train.early_stop.enabled, "enable the early-stop rule"),
      HOOP_SIZE("train.early_stop_window", train.early_stop.window, "validation losses averaged"),
      HOOP_DOUBLE("train.early_stop_factor", train.early_stop.factor, "early-stop factor in (0, 1)"),
      Field{"train.early_stop_comparator",
            "below_factor_of_mean (stop on a sharp drop) or above_mean_over_factor (stop on a rise)",
            [](const RunConfig& c) {
              return std::string(c.train.early_stop.comparator == train::StopComparator::kBelowFactorOfMean
                                     ? "below_factor_of_mean"
                                     : "above_mean_over_factor");
            },
            [](RunConfig& c, const std::string& k, std::string_view v) {
              if (v == "below_factor_of_mean") {
                c.train.early_stop.comparator = train::StopComparator::kBelowFactorOfMean;
              } else if (v == "above_mean_over_factor") {
                c.train.early_stop.comparator = train::StopComparator::kAboveMeanOverFactor;
              } else {
                bad_value(k, v, "below_factor_of_mean or above_mean_over_factor");
              }
            }},
      Field{"train.generate_nll", "prefix (score each offset from its own prefix) or full",
            [](const RunConfig& c) {
              return std::string(c.train.generate_nll_mode == seq::NllMode::kPrefix ? "prefix" : "full");
            },
            [](RunConfig& c, const std::string& k, std::string_view v) {
              if (v == "prefix") {
                c.train.generate_nll_mode = seq::NllMode::kPrefix;
              } else if (v == "full") {
                c.train.generate_nll_mode = seq::NllMode::kFullSequence;
              } else {
                bad_value(k, v, "prefix or full");
              }
            }},

      HOOP_DOUBLE("data.cutoff_ft", cutoff_ft, "distance cutoff for prep, train and eval"),
      Field{"sweep.cutoffs_ft", "comma-separated cutoffs for the distance sweep",
            [](const RunConfig& c) { return fmt_list(c.sweep_cutoffs); },
            [](RunConfig& c, const std::string& k, std::string_view v) { c.sweep_cutoffs = to_list(k, v); }},
      HOOP_BOOL("sweep.baseline", sweep_baseline, "also fit the logistic baseline per cutoff"),
      HOOP_SIZE("sweep.min_sequences", sweep_min_sequences, "fewer kept sequences marks a cutoff insufficient"),

      Field{"search.strategy", "grid or random",
            [](const RunConfig& c) {
              return std::string(c.search.strategy == train::SearchStrategy::kGrid ? "grid" : "random");
            },
            [](RunConfig& c, const std::string& k, std::string_view v) {
              if (v == "grid") {
                c.search.strategy = train::SearchStrategy::kGrid;
              } else if (v == "random") {
                c.search.strategy = train::SearchStrategy::kRandom;
              } else {
                bad_value(k, v, "grid or random");
              }
            }},
      HOOP_SIZE("search.budget", search.budget, "maximum trials"),

      HOOP_SIZE("generate.branch", generate.branch_factor, "samples per live trajectory per step"),
      HOOP_SIZE("generate.steps", generate.steps, "generated points"),
      HOOP_SIZE("generate.grid_resolution", generate.grid_resolution, "density grid points per axis"),
      HOOP_DOUBLE("generate.grid_half_width_ft", generate.grid_half_width_ft, "density grid half width"),
  };
  return table;
}

#undef HOOP_DOUBLE
#undef HOOP_SIZE
#undef HOOP_BOOL

constexpr std::string_view kGridPrefix = "search.grid.";
constexpr std::string_view kRangePrefix = "search.range.";

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string_view v = trim(value);
  if (key.starts_with(kGridPrefix) && key.size() > kGridPrefix.size()) {
    search_space.grid[key.substr(kGridPrefix.size())] = to_list(key, v);
    return;
  }
  if (key.starts_with(kRangePrefix) && key.size() > kRangePrefix.size()) {
    search_space.ranges[key.substr(kRangePrefix.size())] = to_range(key, v);
    return;
  }
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, key, v);
      return;
    }
  }
  throw SchemaError("unknown config key '" + key + "'");
}

void RunConfig::apply(std::istream& text) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(text, line)) {
    ++number;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(number, "expected 'key = value'");
    const std::string key(trim(t.substr(0, eq)));
    if (key.empty()) throw ParseError(number, "empty key");
    set(key, std::string(t.substr(eq + 1)));
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  apply(in);
}

void RunConfig::resolve() {
  synth.seed = seed;
  train.seed = seed;
  search.seed = seed;
  generate.seed = seed;
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& f : fields()) out << f.key << " = " << f.get(*this) << '\n';
  for (const auto& [key, values] : search_space.grid) {
    out << kGridPrefix << key << " = " << fmt_list(values) << '\n';
  }
  for (const auto& [key, range] : search_space.ranges) {
    out << kRangePrefix << key << " = " << fmt_range(range) << '\n';
  }
}

std::string RunConfig::describe_keys() {
  const RunConfig defaults;
  std::ostringstream s;
  for (const auto& f : fields()) {
    s << "  " << f.key << " = " << f.get(defaults) << "\n      " << f.help << '\n';
  }
  s << "  search.grid.<param> = v1,v2,...\n      grid axis; params: lr units layers components "
       "batch_size lambda epochs\n"
    << "  search.range.<param> = lo:hi[:log][:int]\n      random-search range for the same params\n";
  return s.str();
}

}  // namespace hoopnet::cli
