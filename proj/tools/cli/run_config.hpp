#pragma once

// Run configuration for the hoop tool: a flat `key = value` text file with
// dotted keys. Every key has a default; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hoopnet/dataforge.hpp"
#include "hoopnet/generate.hpp"
#include "hoopnet/seqnet.hpp"
#include "hoopnet/trainer.hpp"

namespace hoopnet::cli {

struct RunConfig {
  std::uint64_t seed = 20151027;
  std::filesystem::path out = "hoop_out";

  data::SynthConfig synth{};
  data::CourtSpec court{};
  seq::ModelConfig model{};
  train::TrainConfig train{};

  /// Distance cutoff used by prep, train and single-model eval.
  double cutoff_ft = 5.0;
  std::vector<double> sweep_cutoffs{2, 3, 4, 5, 6, 7, 8};
  bool sweep_baseline = true;
  std::size_t sweep_min_sequences = 100;

  train::SearchSpace search_space{};
  train::SearchOptions search{};

  gen::GenerateOptions generate{};

  /// Applies `text` on top of the current values. Throws ParseError for
  /// malformed lines and SchemaError for unknown keys or bad values.
  void apply(std::istream& text);
  void apply_file(const std::filesystem::path& path);
  /// Sets one key from its textual value.
  void set(const std::string& key, const std::string& value);

  /// Copies the global seed into every component that consumes one.
  void resolve();

  /// Every key with its resolved value, in a stable order. Re-applying the
  /// output reproduces this configuration exactly.
  void write(std::ostream& out) const;

  /// `key  default  description` lines for --help.
  static std::string describe_keys();
};

}  // namespace hoopnet::cli
