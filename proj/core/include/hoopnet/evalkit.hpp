#pragma once

// ROC/AUC, a logistic baseline on hand-built physics features, and the
// AUC-by-distance sweep.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoopnet/dataforge.hpp"
#include "hoopnet/seqnet.hpp"
#include "hoopnet/trainer.hpp"

namespace hoopnet::eval {

using num::Matrix;

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.5;

  /// Header `fpr,tpr,threshold`.
  void write_csv(std::ostream& out) const;
};

/// AUC as the Mann-Whitney statistic with tied scores credited one half,
/// plus the threshold-sweep curve. Throws EvaluationError when only one
/// class is present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

// --- Logistic baseline ---------------------------------------------------------

inline constexpr std::size_t kBaselineFeatureCount = 3;

/// (distance to rim at the last frame, vertical speed, entry angle) from the
/// last two frames of a rim-relative sequence in feet.
std::array<double, kBaselineFeatureCount> physics_features(const data::ShotSequence& sequence);

struct LogisticOptions {
  std::size_t iterations = 2000;
  double learning_rate = 0.5;
};

struct LogisticModel {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> weights;
  double bias = 0.0;

  double predict_logit(std::span<const double> features) const;
};

/// Full-batch gradient descent on standardized features (zero-variance columns
/// get unit scale).
LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels,
                           const LogisticOptions& options = {});

/// Test AUC of a logistic model fitted on train.
double baseline_logistic(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                         std::span<const int> test_y, const LogisticOptions& options = {});
double baseline_logistic(std::span<const data::ShotSequence> train,
                         std::span<const data::ShotSequence> test,
                         const LogisticOptions& options = {});

// --- Distance sweep ------------------------------------------------------------

inline constexpr const char* kBlstmModelName = "BLSTM-MDN";
inline constexpr const char* kLogisticModelName = "logistic";

struct DistanceRow {
  double cutoff_ft = 0.0;
  std::string model;
  std::optional<double> auc;
  std::size_t best_epoch = 0;
  std::size_t parameter_count = 0;
  double wall_seconds = 0.0;
  std::size_t sequences = 0;
  bool insufficient_data = false;
};

struct DistanceReport {
  std::vector<DistanceRow> rows;  // ascending cutoff

  std::optional<double> auc(double cutoff_ft, const std::string& model) const;
  /// Header `cutoff_ft,model,auc,best_epoch,parameter_count,wall_seconds_per_fit,sequences,status`.
  void write_csv(std::ostream& out) const;
};

struct SweepOptions {
  std::vector<double> cutoffs{2, 3, 4, 5, 6, 7, 8};
  seq::ModelConfig model{};
  train::TrainConfig train{};
  bool include_baseline = false;
  std::size_t min_sequences = 100;
  std::uint64_t seed = 1;
};

struct SweepCutoffResult {
  double cutoff_ft = 0.0;
  RocCurve roc;
};

/// Retrains a fresh classifier for every cutoff and reports its test AUC.
DistanceReport distance_sweep(std::span<const data::RawShot> shots, const data::CourtSpec& court,
                              const SweepOptions& options,
                              std::vector<SweepCutoffResult>* curves = nullptr);

/// Test-set hit scores (logits) of a trained classifier.
std::vector<double> classifier_scores(const seq::ModelParams& model,
                                      std::span<const seq::TrainingSample> samples);
std::vector<int> labels_of(std::span<const seq::TrainingSample> samples);

}  // namespace hoopnet::eval
