#include "hoopnet/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "hoopnet/errors.hpp"

namespace hoopnet::eval {
namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RocCurve::write_csv(std::ostream& out) const {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : points) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ',' << format_double(p.threshold)
        << '\n';
  }
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw EvaluationError("roc_auc: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
  }
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw EvaluationError("roc_auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw EvaluationError("roc_auc: NaN score");
    pos += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw EvaluationError("roc_auc: both classes must be present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie group spanning ranks lo..hi gets (lo + hi) / 2,
  // kept doubled so the numerator stays an exact integer.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      group_pos += static_cast<std::uint64_t>(labels[idx[j]]);
      ++j;
    }
    doubled_rank_sum += group_pos * static_cast<std::uint64_t>((i + 1) + j);
    i = j;
  }
  // 2U = doubled rank sum - P(P+1); AUC = U / (P N).
  const std::uint64_t doubled_u = doubled_rank_sum - pos * (pos + 1);
  RocCurve curve;
  curve.auc = static_cast<double>(doubled_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));

  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = idx.size(); i > 0;) {
    const double threshold = scores[idx[i - 1]];
    while (i > 0 && scores[idx[i - 1]] == threshold) {
      (labels[idx[i - 1]] == 1 ? tp : fp) += 1;
      --i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), threshold});
  }
  return curve;
}

std::array<double, kBaselineFeatureCount> physics_features(const data::ShotSequence& sequence) {
  const Matrix& f = sequence.features;
  if (f.rows() < 2 || f.cols() < 3) throw ShapeError("physics_features: need >= 2 frames of x, y, z");
  const std::size_t last = f.rows() - 1;
  const double dx = f(last, 0) - f(last - 1, 0);
  const double dy = f(last, 1) - f(last - 1, 1);
  const double dz = f(last, 2) - f(last - 1, 2);
  const double distance = std::sqrt(f(last, 0) * f(last, 0) + f(last, 1) * f(last, 1) +
                                    f(last, 2) * f(last, 2));
  const double vz = dz * data::kSampleRateHz;
  const double entry_angle = std::atan2(-dz, std::hypot(dx, dy));
  return {distance, vz, entry_angle};
}

double LogisticModel::predict_logit(std::span<const double> features) const {
  if (features.size() != weights.size()) throw ShapeError("logistic model: feature width mismatch");
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * (features[k] - mean[k]) / std[k];
  return z;
}

LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels,
                           const LogisticOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n == 0 || n != labels.size()) throw ShapeError("fit_logistic: feature/label count mismatch");
  LogisticModel m;
  m.mean.assign(d, 0.0);
  m.std.assign(d, 1.0);
  m.weights.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += features(i, k);
    m.mean[k] = s / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (features(i, k) - m.mean[k]) * (features(i, k) - m.mean[k]);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    m.std[k] = sd > 0.0 ? sd : 1.0;
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) z(i, k) = (features(i, k) - m.mean[k]) / m.std[k];
  }
  std::vector<double> gw(d);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double logit = m.bias;
      for (std::size_t k = 0; k < d; ++k) logit += m.weights[k] * z(i, k);
      const double err = num::sigmoid(logit) - static_cast<double>(labels[i]);
      for (std::size_t k = 0; k < d; ++k) gw[k] += err * z(i, k);
      gb += err;
    }
    const double step = options.learning_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) m.weights[k] -= step * gw[k];
    m.bias -= step * gb;
  }
  return m;
}

double baseline_logistic(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                         std::span<const int> test_y, const LogisticOptions& options) {
  if (train_x.cols() != test_x.cols()) throw ShapeError("baseline_logistic: feature width mismatch");
  const LogisticModel m = fit_logistic(train_x, train_y, options);
  std::vector<double> scores(test_x.rows());
  for (std::size_t i = 0; i < test_x.rows(); ++i) {
    scores[i] = m.predict_logit(std::span<const double>(test_x.row(i)));
  }
  return roc_auc(scores, test_y).auc;
}

double baseline_logistic(std::span<const data::ShotSequence> train,
                         std::span<const data::ShotSequence> test, const LogisticOptions& options) {
  auto design = [](std::span<const data::ShotSequence> set, std::vector<int>& y) {
    Matrix x(set.size(), kBaselineFeatureCount);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto f = physics_features(set[i]);
      for (std::size_t k = 0; k < kBaselineFeatureCount; ++k) x(i, k) = f[k];
      y.push_back(set[i].label);
    }
    return x;
  };
  std::vector<int> train_y, test_y;
  const Matrix train_x = design(train, train_y);
  const Matrix test_x = design(test, test_y);
  return baseline_logistic(train_x, train_y, test_x, test_y, options);
}

std::optional<double> DistanceReport::auc(double cutoff_ft, const std::string& model) const {
  for (const auto& r : rows) {
    if (r.cutoff_ft == cutoff_ft && r.model == model) return r.auc;
  }
  return std::nullopt;
}

void DistanceReport::write_csv(std::ostream& out) const {
  out << "cutoff_ft,model,auc,best_epoch,parameter_count,wall_seconds_per_fit,sequences,status\n";
  for (const auto& r : rows) {
    out << format_double(r.cutoff_ft) << ',' << r.model << ',' << (r.auc ? format_double(*r.auc) : "")
        << ',' << r.best_epoch << ',' << r.parameter_count << ',' << format_double(r.wall_seconds)
        << ',' << r.sequences << ',' << (r.insufficient_data ? "insufficient_data" : "ok") << '\n';
  }
}

std::vector<double> classifier_scores(const seq::ModelParams& model,
                                      std::span<const seq::TrainingSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(seq::stack_forward(model, s.inputs).logit);
  return out;
}

std::vector<int> labels_of(std::span<const seq::TrainingSample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

namespace {

bool has_both_classes(std::span<const int> labels) {
  const auto ones = std::count(labels.begin(), labels.end(), 1);
  return ones > 0 && ones < static_cast<std::ptrdiff_t>(labels.size());
}

}  // namespace

DistanceReport distance_sweep(std::span<const data::RawShot> shots, const data::CourtSpec& court,
                              const SweepOptions& options, std::vector<SweepCutoffResult>* curves) {
  std::vector<double> cutoffs = options.cutoffs;
  if (cutoffs.empty()) throw DomainError("distance_sweep: no cutoffs");
  std::sort(cutoffs.begin(), cutoffs.end());
  train::TrainConfig train_cfg = options.train;
  train_cfg.task = train::Task::kClassify;
  const std::size_t params = seq::count_parameters(options.model);

  DistanceReport report;
  for (const double cutoff : cutoffs) {
    DistanceRow row;
    row.cutoff_ft = cutoff;
    row.model = kBlstmModelName;
    row.parameter_count = params;

    const std::size_t kept = data::prepare_sequences(shots, court, cutoff).size();
    row.sequences = kept;
    std::optional<train::PreparedData> prepared;
    if (kept >= std::max<std::size_t>(options.min_sequences, 2)) {
      prepared = train::prepare_dataset(shots, court, cutoff, options.seed);
      const auto train_labels = labels_of(prepared->dataset.train);
      const auto test_labels = labels_of(prepared->dataset.validation);
      if (!has_both_classes(train_labels) || !has_both_classes(test_labels)) prepared.reset();
    }
    if (!prepared) {
      row.insufficient_data = true;
      report.rows.push_back(row);
      if (options.include_baseline) {
        DistanceRow base = row;
        base.model = kLogisticModelName;
        base.parameter_count = kBaselineFeatureCount + 1;
        report.rows.push_back(base);
      }
      continue;
    }

    num::SeededRng init_rng = num::SeededRng(options.seed).split(num::Stream::kInit);
    const auto initial = seq::ModelParams::init_uniform(options.model, init_rng);
    const auto fitted = train::fit(initial, prepared->dataset, train_cfg);
    const auto scores = classifier_scores(fitted.model, prepared->dataset.validation);
    RocCurve roc = roc_auc(scores, labels_of(prepared->dataset.validation));
    row.auc = roc.auc;
    row.best_epoch = fitted.report.best_epoch;
    row.wall_seconds = fitted.report.wall_seconds;
    report.rows.push_back(row);
    if (curves != nullptr) curves->push_back({cutoff, std::move(roc)});

    if (options.include_baseline) {
      const auto started = std::chrono::steady_clock::now();
      DistanceRow base;
      base.cutoff_ft = cutoff;
      base.model = kLogisticModelName;
      base.parameter_count = kBaselineFeatureCount + 1;
      base.sequences = kept;
      base.auc = baseline_logistic(prepared->train_sequences, prepared->test_sequences);
      base.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      report.rows.push_back(base);
    }
  }
  return report;
}

}  // namespace hoopnet::eval
