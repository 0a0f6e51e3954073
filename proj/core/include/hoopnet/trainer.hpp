#pragma once

// Adam, the trailing-mean early-stop rule, the epoch loop, and grid/random
// hyperparameter search.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoopnet/dataforge.hpp"
#include "hoopnet/seqnet.hpp"

namespace hoopnet::train {

using num::Matrix;

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators, one per parameter tensor.
struct AdamState {
  AdamHyper hyper;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;

  AdamState() = default;
  AdamState(std::span<const Matrix* const> like, AdamHyper hyper);
  AdamState(const seq::ModelParams& like, AdamHyper hyper);
};

/// One bias-corrected Adam update. Throws TrainingError on a non-finite gradient.
void adam_step(AdamState& state, std::span<Matrix* const> params,
               std::span<const Matrix* const> grads);
void adam_step(AdamState& state, seq::ModelParams& params, const seq::ModelParams& grads);

/// Rescales grads so their global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(seq::ModelParams& grads, double max_norm);

enum class StopComparator {
  /// Stop when current < factor * mean(window): the rule exactly as stated.
  kBelowFactorOfMean,
  /// Stop when current > mean(window) / factor, i.e. loss drifting upward.
  kAboveMeanOverFactor,
};

struct EarlyStopRule {
  bool enabled = true;
  std::size_t window = 10;
  double factor = 0.9;
  StopComparator comparator = StopComparator::kBelowFactorOfMean;
};

/// history holds earlier validation losses, oldest first; only the last
/// `window` entries are used. Never stops with fewer than `window` entries.
bool early_stop_check(std::span<const double> history, double current, const EarlyStopRule& rule);

enum class Task { kClassify, kGenerate };

const char* task_name(Task task);

struct TrainConfig {
  Task task = Task::kClassify;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  /// Weight of the mixture NLL next to the cross-entropy in the classify task.
  double lambda = 1.0;
  EarlyStopRule early_stop{};
  AdamHyper adam{};
  double clip_norm = 5.0;
  std::uint64_t seed = 7;
  /// How the generate task attaches its NLL (see seq::NllMode).
  seq::NllMode generate_nll_mode = seq::NllMode::kPrefix;

  void validate() const;
  seq::LossSpec loss_spec() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_auc;
};

struct TrainReport {
  Task task = Task::kClassify;
  std::vector<EpochRecord> epochs;
  std::size_t stop_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
  double wall_seconds = 0.0;

  /// AUC recorded at the best epoch (classify task).
  std::optional<double> best_val_auc() const;
  /// `epoch,train_loss,val_loss,val_auc` (classify) or
  /// `epoch,train_loss,val_loss,val_nll` (generate). Deterministic for a seed.
  void write_csv(std::ostream& out) const;
  /// One line of `key=value` pairs, including wall time.
  std::string summary_line() const;
};

struct Dataset {
  std::vector<seq::TrainingSample> train;
  std::vector<seq::TrainingSample> validation;
};

/// Inputs standardized with the scaler, targets as scaled next-point offsets.
seq::TrainingSample make_sample(const data::ShotSequence& sequence, const data::FeatureScaler& scaler);

/// Everything derived from one dataset at one distance cutoff.
struct PreparedData {
  Dataset dataset;
  data::FeatureScaler scaler;
  data::SplitIndex split;
  std::vector<data::ShotSequence> train_sequences;  // rim-relative feet, unscaled
  std::vector<data::ShotSequence> test_sequences;
  data::PrepStats stats;
};

/// rim_relative -> cutoff -> 80/20 split -> scaler fitted on train only.
PreparedData prepare_dataset(std::span<const data::RawShot> shots, const data::CourtSpec& court,
                             double cutoff_ft, std::uint64_t split_seed);

struct FitResult {
  seq::ModelParams model;  // best-validation-loss checkpoint
  TrainReport report;
};

FitResult fit(const seq::ModelParams& initial, const Dataset& data, const TrainConfig& cfg);

// --- Search -----------------------------------------------------------------

enum class SearchStrategy { kGrid, kRandom };

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool integer = false;
};

/// Recognised keys: lr, units, layers, components, batch_size, lambda, epochs.
struct SearchSpace {
  std::map<std::string, std::vector<double>> grid;
  std::map<std::string, ParamRange> ranges;
};

using TrialParams = std::map<std::string, double>;

struct SearchOptions {
  SearchStrategy strategy = SearchStrategy::kGrid;
  std::size_t budget = 50;
  std::uint64_t seed = 11;
};

struct Trial {
  std::size_t index = 0;
  TrialParams params;
  /// Validation AUC (classify) or best validation NLL (generate).
  double metric = 0.0;
  /// Higher is better: the AUC, or the negated NLL.
  double score = 0.0;
  std::size_t parameter_count = 0;
  TrainReport report;
};

/// The configurations a search would run, in execution order.
std::vector<TrialParams> enumerate_trials(const SearchSpace& space, const SearchOptions& options);

/// Applies trial overrides to a model/training configuration pair.
void apply_trial(const TrialParams& params, seq::ModelConfig& model, TrainConfig& train);

/// Runs every trial (fresh model, full fit) and returns them best first.
std::vector<Trial> search(const SearchSpace& space, const SearchOptions& options,
                          const seq::ModelConfig& base_model, const TrainConfig& base_train,
                          const Dataset& data);

}  // namespace hoopnet::train
