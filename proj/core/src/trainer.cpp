#include "hoopnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "hoopnet/errors.hpp"
#include "hoopnet/evalkit.hpp"

namespace hoopnet::train {
namespace {

std::vector<Matrix*> mutable_tensors(seq::ModelParams& p) {
  std::vector<Matrix*> out;
  for (auto& t : p.tensors()) out.push_back(t.tensor);
  return out;
}

std::vector<const Matrix*> const_tensors(const seq::ModelParams& p) {
  std::vector<const Matrix*> out;
  for (const auto& t : p.tensors()) out.push_back(t.tensor);
  return out;
}

void append_double(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace

AdamState::AdamState(std::span<const Matrix* const> like, AdamHyper h) : hyper(h) {
  m.reserve(like.size());
  v.reserve(like.size());
  for (const Matrix* t : like) {
    m.emplace_back(t->rows(), t->cols(), 0.0);
    v.emplace_back(t->rows(), t->cols(), 0.0);
  }
}

AdamState::AdamState(const seq::ModelParams& like, AdamHyper h)
    : AdamState(std::span<const Matrix* const>(const_tensors(like)), h) {}

void adam_step(AdamState& state, std::span<Matrix* const> params,
               std::span<const Matrix* const> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: tensor count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows() != grads[k]->rows() || params[k]->cols() != grads[k]->cols() ||
        state.m[k].rows() != grads[k]->rows() || state.m[k].cols() != grads[k]->cols()) {
      throw ShapeError("adam_step: tensor " + std::to_string(k) + " shape mismatch");
    }
    if (!grads[k]->all_finite()) throw TrainingError("adam_step: non-finite gradient");
  }
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k]->data().data();
    const double* g = grads[k]->data().data();
    double* m = state.m[k].data().data();
    double* v = state.v[k].data().data();
    const std::size_t n = params[k]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

void adam_step(AdamState& state, seq::ModelParams& params, const seq::ModelParams& grads) {
  const auto p = mutable_tensors(params);
  const auto g = const_tensors(grads);
  adam_step(state, std::span<Matrix* const>(p), std::span<const Matrix* const>(g));
}

double clip_global_norm(seq::ModelParams& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& t : std::as_const(grads).tensors()) {
    const double* d = t.tensor->data().data();
    for (std::size_t j = 0; j < t.tensor->size(); ++j) sq += d[j] * d[j];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& t : grads.tensors()) {
      double* d = t.tensor->data().data();
      for (std::size_t j = 0; j < t.tensor->size(); ++j) d[j] *= scale;
    }
  }
  return norm;
}

bool early_stop_check(std::span<const double> history, double current, const EarlyStopRule& rule) {
  if (!rule.enabled || rule.window == 0 || history.size() < rule.window) return false;
  const auto recent = history.subspan(history.size() - rule.window);
  const double mean =
      std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(rule.window);
  switch (rule.comparator) {
    case StopComparator::kBelowFactorOfMean:
      return current < rule.factor * mean;
    case StopComparator::kAboveMeanOverFactor:
      return current > mean / rule.factor;
  }
  return false;
}

const char* task_name(Task task) { return task == Task::kClassify ? "classify" : "generate"; }

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be >= 1");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and >= 0");
  if (early_stop.window < 1) throw DomainError("early-stop window must be >= 1");
  if (!(early_stop.factor > 0.0 && early_stop.factor < 1.0)) {
    throw DomainError("early-stop factor must lie in (0, 1)");
  }
  if (!(adam.lr >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    throw DomainError("invalid Adam hyperparameters");
  }
  if (!(clip_norm >= 0.0)) throw DomainError("clip norm must be >= 0");
}

seq::LossSpec TrainConfig::loss_spec() const {
  if (task == Task::kClassify) return {1.0, lambda, seq::NllMode::kFullSequence};
  return {0.0, 1.0, generate_nll_mode};
}

std::optional<double> TrainReport::best_val_auc() const {
  for (const auto& e : epochs) {
    if (e.epoch == best_epoch) return e.val_auc;
  }
  return std::nullopt;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << (task == Task::kClassify ? "epoch,train_loss,val_loss,val_auc\n"
                                  : "epoch,train_loss,val_loss,val_nll\n");
  for (const auto& e : epochs) {
    std::string line = std::to_string(e.epoch) + ",";
    append_double(line, e.train_loss);
    line += ",";
    append_double(line, e.val_loss);
    line += ",";
    if (task == Task::kClassify) {
      if (e.val_auc) append_double(line, *e.val_auc);
    } else {
      // The generate objective is the mixture NLL itself.
      append_double(line, e.val_loss);
    }
    out << line << '\n';
  }
}

std::string TrainReport::summary_line() const {
  std::ostringstream s;
  s << "task=" << task_name(task) << " epochs_run=" << epochs.size() << " stop_epoch=" << stop_epoch
    << " early_stopped=" << (early_stopped ? "true" : "false") << " best_epoch=" << best_epoch
    << " best_val_loss=" << best_val_loss;
  if (const auto auc = best_val_auc()) s << " best_val_auc=" << *auc;
  s << " wall_seconds=" << wall_seconds;
  return s.str();
}

seq::TrainingSample make_sample(const data::ShotSequence& sequence, const data::FeatureScaler& scaler) {
  return {scaler.scale_features(sequence.features), scaler.scaled_offsets(sequence.features),
          sequence.label};
}

PreparedData prepare_dataset(std::span<const data::RawShot> shots, const data::CourtSpec& court,
                             double cutoff_ft, std::uint64_t split_seed) {
  PreparedData out;
  auto sequences = data::prepare_sequences(shots, court, cutoff_ft, &out.stats);
  std::vector<std::string> ids;
  ids.reserve(sequences.size());
  for (const auto& s : sequences) ids.push_back(s.shot_id);
  out.split = data::pareto_split(ids, split_seed);
  const std::unordered_set<std::string> train_ids(out.split.train_ids.begin(),
                                                  out.split.train_ids.end());
  for (auto& s : sequences) {
    if (train_ids.contains(s.shot_id)) {
      out.train_sequences.push_back(std::move(s));
    } else {
      out.test_sequences.push_back(std::move(s));
    }
  }
  out.scaler = data::FeatureScaler::fit(out.train_sequences);
  for (const auto& s : out.train_sequences) out.dataset.train.push_back(make_sample(s, out.scaler));
  for (const auto& s : out.test_sequences) {
    out.dataset.validation.push_back(make_sample(s, out.scaler));
  }
  return out;
}

FitResult fit(const seq::ModelParams& initial, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  initial.config.validate();
  if (data.train.empty()) throw DomainError("fit: empty training set");
  if (data.validation.empty()) throw DomainError("fit: empty validation set");
  for (const auto* set : {&data.train, &data.validation}) {
    for (const auto& s : *set) {
      if (s.inputs.rows() != initial.config.seq_len || s.inputs.cols() != initial.config.input_dim) {
        throw ShapeError("fit: sample shape " + s.inputs.shape_string() +
                         " does not match the model configuration");
      }
    }
  }

  const auto started = std::chrono::steady_clock::now();
  const seq::LossSpec spec = cfg.loss_spec();
  FitResult result{initial, {}};
  result.report.task = cfg.task;
  seq::ModelParams params = initial;
  seq::ModelParams grads = seq::ModelParams::zeros(initial.config);
  AdamState adam(params, cfg.adam);
  num::SeededRng shuffle_rng = num::SeededRng(cfg.seed).split(num::Stream::kShuffle);

  const std::vector<int> val_labels = eval::labels_of(data.validation);
  const bool both_classes = std::find(val_labels.begin(), val_labels.end(), 0) != val_labels.end() &&
                            std::find(val_labels.begin(), val_labels.end(), 1) != val_labels.end();

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<seq::TrainingSample> batch;
  std::vector<double> per_sample;
  std::vector<double> val_history;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(data.train[order[k]]);
      per_sample.assign(batch.size(), 0.0);
      try {
        seq::backward(params, batch, spec, grads, batch_id, per_sample);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")",
                            e.batch_id(), epoch);
      }
      for (const double l : per_sample) loss_sum += l;
      if (cfg.clip_norm > 0.0) clip_global_norm(grads, cfg.clip_norm);
      adam_step(adam, params, grads);
    }

    const auto evals = seq::evaluate_samples(params, data.validation, spec);
    double val_sum = 0.0;
    for (const auto& e : evals) val_sum += e.loss.total;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(data.train.size());
    rec.val_loss = val_sum / static_cast<double>(evals.size());
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw TrainingError("fit: loss diverged at epoch " + std::to_string(epoch), 0, epoch);
    }
    if (cfg.task == Task::kClassify && both_classes) {
      std::vector<double> scores;
      scores.reserve(evals.size());
      for (const auto& e : evals) scores.push_back(e.logit);
      rec.val_auc = eval::roc_auc(scores, val_labels).auc;
    }
    result.report.epochs.push_back(rec);
    result.report.stop_epoch = epoch;

    if (!have_best || rec.val_loss < result.report.best_val_loss) {
      have_best = true;
      result.report.best_val_loss = rec.val_loss;
      result.report.best_epoch = epoch;
      result.model = params;
    }
    const bool stop = early_stop_check(val_history, rec.val_loss, cfg.early_stop);
    val_history.push_back(rec.val_loss);
    if (stop) {
      result.report.early_stopped = true;
      break;
    }
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace hoopnet::train
