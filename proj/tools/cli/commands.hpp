#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "run_config.hpp"

namespace hoopnet::cli {

/// Process exit codes; stable across versions.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitInputError = 2,
  kExitDiverged = 3,
};

// Each command writes its artifacts (atomically) under cfg.out, echoes the
// resolved configuration there, and prints a short summary to `log`. Errors
// propagate as hoopnet exceptions; run() maps them to exit codes.

int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_prep(const RunConfig& cfg, const std::filesystem::path& data_csv, std::ostream& log);
int cmd_train(const RunConfig& cfg, const std::filesystem::path& data_csv, std::ostream& log);

/// Without a checkpoint: distance sweep over cfg.sweep_cutoffs. With one:
/// ROC of that classifier on the test split at cfg.cutoff_ft.
int cmd_eval(const RunConfig& cfg, const std::filesystem::path& data_csv,
             const std::optional<std::filesystem::path>& checkpoint_dir, std::ostream& log);

int cmd_search(const RunConfig& cfg, const std::filesystem::path& data_csv, std::ostream& log);

struct GenerateArgs {
  std::filesystem::path checkpoint_dir;  // holds model.bin and scaler.txt
  std::filesystem::path prefix_csv;      // first shot in the file is used
  std::optional<std::size_t> prefix_frames;  // keep only the first N frames
};

int cmd_generate(const RunConfig& cfg, const GenerateArgs& args, std::ostream& log);

struct GradcheckArgs {
  std::uint64_t seed = 1;
  /// Test hook: tensor whose first analytic gradient entry is perturbed.
  std::optional<std::string> corrupt_tensor;
};

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& log);

/// Full command-line entry point (argument parsing, dispatch, error mapping).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Artifact names inside the output directory.
inline constexpr const char* kShotsFile = "shots.csv";
inline constexpr const char* kResolvedConfigFile = "resolved_config.txt";
inline constexpr const char* kModelFile = "model.bin";
inline constexpr const char* kScalerFile = "scaler.txt";
inline constexpr const char* kTrainReportFile = "train_report.csv";
inline constexpr const char* kSummaryFile = "summary.txt";

}  // namespace hoopnet::cli
