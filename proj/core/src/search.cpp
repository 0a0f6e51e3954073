#include <algorithm>
#include <cmath>

#include "hoopnet/errors.hpp"
#include "hoopnet/evalkit.hpp"
#include "hoopnet/trainer.hpp"

namespace hoopnet::train {
namespace {

const char* const kKnownKeys[] = {"lr", "units", "layers", "components", "batch_size", "lambda",
                                  "epochs"};

void check_key(const std::string& key) {
  if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
    throw DomainError("unknown search parameter '" + key + "'");
  }
}

std::size_t as_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw DomainError(std::string("search parameter ") + what + " must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<TrialParams> enumerate_trials(const SearchSpace& space, const SearchOptions& options) {
  if (options.budget < 1) throw DomainError("search budget must be >= 1");
  std::vector<TrialParams> out;
  if (options.strategy == SearchStrategy::kGrid) {
    if (space.grid.empty()) throw DomainError("grid search needs a non-empty grid");
    for (const auto& [key, values] : space.grid) {
      check_key(key);
      if (values.empty()) throw DomainError("grid axis '" + key + "' has no values");
    }
    // Odometer over the axes in key order; the last key varies fastest.
    std::vector<std::pair<std::string, const std::vector<double>*>> axes;
    for (const auto& [key, values] : space.grid) axes.emplace_back(key, &values);
    std::vector<std::size_t> pos(axes.size(), 0);
    while (out.size() < options.budget) {
      TrialParams t;
      for (std::size_t a = 0; a < axes.size(); ++a) t[axes[a].first] = (*axes[a].second)[pos[a]];
      out.push_back(std::move(t));
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (++pos[a] < axes[a].second->size()) break;
        pos[a] = 0;
        if (a == 0) return out;
      }
    }
    return out;
  }

  if (space.ranges.empty() && space.grid.empty()) {
    throw DomainError("random search needs at least one range or grid axis");
  }
  for (const auto& [key, r] : space.ranges) {
    check_key(key);
    if (!(r.lo <= r.hi) || (r.log_scale && !(r.lo > 0.0))) {
      throw DomainError("search range '" + key + "' is empty or invalid");
    }
  }
  for (const auto& [key, values] : space.grid) {
    check_key(key);
    if (values.empty()) throw DomainError("grid axis '" + key + "' has no values");
  }
  num::SeededRng rng = num::SeededRng(options.seed).split(num::Stream::kSearch);
  for (std::size_t i = 0; i < options.budget; ++i) {
    TrialParams t;
    for (const auto& [key, r] : space.ranges) {
      double v = r.log_scale ? std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)))
                             : rng.uniform(r.lo, r.hi);
      if (r.integer) v = std::clamp(std::round(v), std::ceil(r.lo), std::floor(r.hi));
      t[key] = v;
    }
    for (const auto& [key, values] : space.grid) t[key] = values[rng.below(values.size())];
    out.push_back(std::move(t));
  }
  return out;
}

void apply_trial(const TrialParams& params, seq::ModelConfig& model, TrainConfig& train) {
  for (const auto& [key, v] : params) {
    if (key == "lr") {
      train.adam.lr = v;
    } else if (key == "units") {
      model.units = as_count(v, "units");
    } else if (key == "layers") {
      model.num_layers = as_count(v, "layers");
    } else if (key == "components") {
      model.components = as_count(v, "components");
    } else if (key == "batch_size") {
      train.batch_size = as_count(v, "batch_size");
    } else if (key == "lambda") {
      train.lambda = v;
    } else if (key == "epochs") {
      train.epochs = as_count(v, "epochs");
    } else {
      check_key(key);
    }
  }
}

std::vector<Trial> search(const SearchSpace& space, const SearchOptions& options,
                          const seq::ModelConfig& base_model, const TrainConfig& base_train,
                          const Dataset& data) {
  const auto configs = enumerate_trials(space, options);
  std::vector<Trial> trials;
  trials.reserve(configs.size());
  const num::SeededRng root = num::SeededRng(options.seed).split(num::Stream::kInit);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    seq::ModelConfig model_cfg = base_model;
    TrainConfig train_cfg = base_train;
    apply_trial(configs[i], model_cfg, train_cfg);
    model_cfg.validate();
    num::SeededRng init_rng = root.split(i);
    const auto initial = seq::ModelParams::init_uniform(model_cfg, init_rng);
    auto fitted = fit(initial, data, train_cfg);

    Trial t;
    t.index = i;
    t.params = configs[i];
    t.parameter_count = initial.parameter_count();
    if (train_cfg.task == Task::kClassify) {
      const auto scores = eval::classifier_scores(fitted.model, data.validation);
      t.metric = eval::roc_auc(scores, eval::labels_of(data.validation)).auc;
      t.score = t.metric;
    } else {
      t.metric = fitted.report.best_val_loss;
      t.score = -t.metric;
    }
    t.report = std::move(fitted.report);
    trials.push_back(std::move(t));
  }
  std::stable_sort(trials.begin(), trials.end(),
                   [](const Trial& a, const Trial& b) { return a.score > b.score; });
  return trials;
}

}  // namespace hoopnet::train
