// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "hoopnet/dataforge.hpp"
#include "hoopnet/evalkit.hpp"
#include "hoopnet/generate.hpp"
#include "hoopnet/mixhead.hpp"
#include "hoopnet/seqnet.hpp"
#include "hoopnet/trainer.hpp"

using namespace hoopnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --- 1 ---------------------------------------------------------------------

Verdict gradient_correctness() {
  Verdict v;
  const auto t0 = Clock::now();
  seq::GradCheckOptions opt;  // 2 layers, 8 units, T=12, C=3, h=1e-5
  const auto report = seq::gradient_check(1, opt);
  const double secs = seconds_since(t0);
  v.require(opt.config == seq::ModelConfig{2, 8, 3, 12, 4}, "checker model shape");
  v.require(report.max_rel_error < 1e-4, "max relative error < 1e-4");
  v.require(secs < 60.0, "runtime < 60 s");
  v.note("max_rel=" + fmt("%.3g", report.max_rel_error) + " over " +
         std::to_string(report.coordinates.size()) + " coords, " + fmt("%.1f", secs) + " s");
  return v;
}

// --- 2 ---------------------------------------------------------------------

double naive_density(const mdn::Mixture& mix, const mdn::TargetPoint& y) {
  constexpr double pi = std::numbers::pi;
  double p = 0.0;
  for (const auto& c : mix.components) {
    const double zx = (y.dx - c.mean[0]) / c.sigma[0];
    const double zy = (y.dy - c.mean[1]) / c.sigma[1];
    const double zz = (y.dz - c.mean[2]) / c.sigma[2];
    const double q = 1.0 - c.rho * c.rho;
    p += c.weight * std::exp(-(zx * zx + zy * zy - 2.0 * c.rho * zx * zy) / (2.0 * q)) /
         (2.0 * pi * c.sigma[0] * c.sigma[1] * std::sqrt(q)) * std::exp(-0.5 * zz * zz) /
         (std::sqrt(2.0 * pi) * c.sigma[2]);
  }
  return p;
}

Verdict mixture_math() {
  Verdict v;
  num::SeededRng rng(2);
  std::size_t bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto mix = mdn::normalize(testgen::random_raw(rng, 1 + rng.below(5), 20.0));
    double sum = 0.0;
    bool ok = true;
    for (const auto& c : mix.components) {
      sum += c.weight;
      ok = ok && c.sigma[0] > 0.0 && c.sigma[1] > 0.0 && c.sigma[2] > 0.0 && std::abs(c.rho) < 1.0;
    }
    if (!ok || std::abs(sum - 1.0) > 1e-12) ++bad;
  }
  v.require(bad == 0, "normalize invariants (" + std::to_string(bad) + " violations)");

  const mdn::Mixture unit{{mdn::Component{}}};
  const double d = mdn::density(unit, {});
  v.require(std::abs(d - 0.0634936) < 1e-6, "unit density at the mean = 0.0634936");

  double worst = 0.0;
  std::size_t compared = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto mix = mdn::normalize(testgen::random_raw(rng, 1 + rng.below(4), 3.0));
    const mdn::TargetPoint y{3.0 * rng.normal(), 3.0 * rng.normal(), 3.0 * rng.normal()};
    const double naive = naive_density(mix, y);
    if (!(naive > 1e-300) || !std::isfinite(naive)) continue;
    const std::vector<mdn::Mixture> m{mix};
    const std::vector<mdn::TargetPoint> t{y};
    worst = std::max(worst, std::abs(mdn::nll(m, t) + std::log(naive)));
    ++compared;
  }
  v.require(worst < 1e-10, "log-sum-exp vs naive NLL < 1e-10");
  v.note("density=" + fmt("%.7f", d) + ", nll max diff " + fmt("%.2g", worst) + " over " +
         std::to_string(compared));
  return v;
}

// --- 3 ---------------------------------------------------------------------

Verdict sampler_fidelity() {
  Verdict v;
  // Components far apart so each draw can be attributed to its component.
  mdn::Mixture mix;
  mix.components.push_back({0.2, {-100.0, 0.0, 5.0}, {1.0, 2.0, 0.5}, 0.5});
  mix.components.push_back({0.5, {0.0, 10.0, -3.0}, {0.7, 0.4, 1.5}, -0.6});
  mix.components.push_back({0.3, {100.0, -4.0, 0.0}, {2.0, 1.0, 1.0}, 0.0});
  const std::size_t n = 100000;

  struct Acc {
    double n = 0, sx = 0, sy = 0, sz = 0, sxx = 0, syy = 0, szz = 0, sxy = 0, sxz = 0;
  };
  std::vector<Acc> acc(3);
  num::SeededRng rng = num::SeededRng(3).split(num::Stream::kSampling);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = mdn::sample_point(mix, rng);
    const std::size_t k = p.dx < -50.0 ? 0 : (p.dx > 50.0 ? 2 : 1);
    auto& a = acc[k];
    a.n += 1;
    a.sx += p.dx, a.sy += p.dy, a.sz += p.dz;
    a.sxx += p.dx * p.dx, a.syy += p.dy * p.dy, a.szz += p.dz * p.dz;
    a.sxy += p.dx * p.dy, a.sxz += p.dx * p.dz;
  }
  double worst_freq = 0.0, worst_corr = 0.0, worst_zx = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& c = mix.components[k];
    const auto& a = acc[k];
    worst_freq = std::max(worst_freq, std::abs(a.n / n - c.weight));
    const double m[3] = {a.sx / a.n, a.sy / a.n, a.sz / a.n};
    for (int j = 0; j < 3; ++j) {
      v.require(std::abs(m[j] - c.mean[j]) < 3.0 * c.sigma[j] / std::sqrt(a.n),
                "component " + std::to_string(k) + " mean axis " + std::to_string(j));
    }
    const double vx = a.sxx / a.n - m[0] * m[0], vy = a.syy / a.n - m[1] * m[1],
                 vz = a.szz / a.n - m[2] * m[2];
    const double rxy = (a.sxy / a.n - m[0] * m[1]) / std::sqrt(vx * vy);
    const double rxz = (a.sxz / a.n - m[0] * m[2]) / std::sqrt(vx * vz);
    worst_corr = std::max(worst_corr, std::abs(rxy - c.rho));
    worst_zx = std::max(worst_zx, std::abs(rxz));
  }
  v.require(worst_freq < 0.01, "component frequencies within 0.01");
  v.require(worst_corr < 0.02, "xy correlation within 0.02");
  v.require(worst_zx < 0.02, "z-x correlation within 0.02");
  v.note("freq dev " + fmt("%.4f", worst_freq) + ", rho dev " + fmt("%.4f", worst_corr) +
         ", |corr(x,z)| " + fmt("%.4f", worst_zx));
  return v;
}

// --- 4 ---------------------------------------------------------------------

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  long wins2 = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins2 += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
    }
  }
  return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

Verdict auc_oracle() {
  Verdict v;
  num::SeededRng rng(4);
  std::vector<double> s;
  std::vector<int> y;
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    testgen::random_scored_labels(rng, 2 + rng.below(199), s, y);
    if (eval::roc_auc(s, y).auc != pairwise_auc(s, y)) ++mismatches;
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " of 1000 instances differ from the oracle");
  const double fixture = eval::roc_auc(std::vector<double>{0.9, 0.8, 0.7, 0.1},
                                       std::vector<int>{1, 0, 1, 0})
                             .auc;
  v.require(fixture == 0.75, "fixture AUC 0.75");
  v.note("1000 instances exact, fixture=" + fmt("%.4f", fixture));
  return v;
}

// --- 5 and 8 share one trained next-point model --------------------------

struct GenerateRun {
  train::PreparedData prep;
  train::FitResult fit;
  double seconds = 0.0;
};

train::TrainConfig generate_config() {
  train::TrainConfig cfg;
  cfg.task = train::Task::kGenerate;
  cfg.epochs = 50;
  cfg.early_stop.enabled = false;
  return cfg;
}

seq::ModelParams initial_model(const seq::ModelConfig& cfg, std::uint64_t seed) {
  num::SeededRng rng = num::SeededRng(seed).split(num::Stream::kInit);
  return seq::ModelParams::init_uniform(cfg, rng);
}

const GenerateRun& generate_run() {
  static std::optional<GenerateRun> run;
  if (!run) {
    data::SynthConfig synth;
    synth.n_shots = 2500;
    const auto shots = data::synth_generate(synth, data::CourtSpec{});
    GenerateRun r;
    r.prep = train::prepare_dataset(shots, data::CourtSpec{}, 0.0, synth.seed);
    const auto t0 = Clock::now();
    r.fit = train::fit(initial_model(seq::ModelConfig{}, 1), r.prep.dataset, generate_config());
    r.seconds = seconds_since(t0);
    run = std::move(r);
  }
  return *run;
}

std::string csv_of(const train::TrainReport& r) {
  std::ostringstream out;
  r.write_csv(out);
  return out.str();
}

Verdict training_progress() {
  Verdict v;
  const auto& run = generate_run();
  const auto& epochs = run.fit.report.epochs;
  v.require(run.prep.dataset.train.size() == 2000, "2000 training sequences");
  v.require(epochs.size() == 50, "50 epochs run");
  v.require(epochs.back().train_loss < epochs.front().train_loss, "final train NLL below epoch 1");
  v.note("train NLL " + fmt("%.4f", epochs.front().train_loss) + " -> " +
         fmt("%.4f", epochs.back().train_loss) + " in " + fmt("%.0f", run.seconds) + " s");

  // Short reruns on a subset for the frozen and reproducibility checks.
  train::Dataset small;
  small.train.assign(run.prep.dataset.train.begin(), run.prep.dataset.train.begin() + 200);
  small.validation.assign(run.prep.dataset.validation.begin(),
                          run.prep.dataset.validation.begin() + 50);
  auto cfg = generate_config();
  cfg.epochs = 3;
  const auto init = initial_model(seq::ModelConfig{}, 2);

  auto frozen_cfg = cfg;
  frozen_cfg.adam.lr = 0.0;
  const auto frozen = train::fit(init, small, frozen_cfg);
  bool constant = frozen.model == init;
  for (const auto& e : frozen.report.epochs) {
    constant = constant && e.val_loss == frozen.report.epochs.front().val_loss &&
               std::abs(e.train_loss - frozen.report.epochs.front().train_loss) <=
                   1e-12 * std::abs(e.train_loss);
  }
  v.require(constant, "lr=0 leaves weights and losses constant");

  const auto a = train::fit(init, small, cfg);
  const auto b = train::fit(init, small, cfg);
  v.require(a.model == b.model && csv_of(a.report) == csv_of(b.report),
            "same-seed reruns bit-identical");
  return v;
}

// --- 6 ---------------------------------------------------------------------

Verdict distance_trend() {
  Verdict v;
  const data::SynthConfig synth;  // default dataset
  const auto shots = data::synth_generate(synth, data::CourtSpec{});
  std::size_t hits = 0;
  for (const auto& s : shots) hits += s.label == data::ShotLabel::kHit;
  const double rate = static_cast<double>(hits) / static_cast<double>(shots.size());
  v.require(shots.size() == 5000, "5000 shots");
  v.require(rate >= 0.30 && rate <= 0.40, "hit rate in [0.30, 0.40]");

  eval::SweepOptions opt;
  opt.include_baseline = true;
  opt.train.task = train::Task::kClassify;
  opt.train.lambda = 0.0;
  opt.train.adam.lr = 3e-3;
  opt.train.epochs = 60;
  const auto t0 = Clock::now();
  const auto report = eval::distance_sweep(shots, data::CourtSpec{}, opt);
  const double secs = seconds_since(t0);

  const auto blstm = [&](double c) { return report.auc(c, eval::kBlstmModelName); };
  const auto at2 = blstm(2.0), at8 = blstm(8.0), at5 = blstm(5.0);
  const auto logistic5 = report.auc(5.0, eval::kLogisticModelName);
  v.require(at2 && at8 && at5 && logistic5, "AUC available at 2, 5 and 8 ft");
  if (at2 && at8) v.require(*at2 >= *at8, "AUC(2 ft) >= AUC(8 ft)");
  if (at5 && logistic5) v.require(*at5 >= *logistic5, "BLSTM-MDN >= logistic at 5 ft");
  v.require(secs < 1800.0, "sweep < 30 min");

  std::string curve;
  for (const auto& row : report.rows) {
    if (row.model != eval::kBlstmModelName) continue;
    curve += (curve.empty() ? "" : " ") + fmt("%g:", row.cutoff_ft) +
             (row.auc ? fmt("%.3f", *row.auc) : std::string("n/a"));
  }
  v.note("hit rate " + fmt("%.4f", rate) + ", BLSTM-MDN AUC " + curve + ", logistic@5 " +
         (logistic5 ? fmt("%.3f", *logistic5) : std::string("n/a")) + ", " + fmt("%.0f", secs) +
         " s");
  return v;
}

// --- 7 ---------------------------------------------------------------------

Verdict pipeline_rules() {
  Verdict v;
  v.require(!data::truncate(testgen::approach_shot("short", 11)).has_value(), "11-frame shot dropped");
  const auto kept = data::truncate(testgen::approach_shot("long", 30));
  v.require(kept && kept->features.rows() == 12, "30-frame shot keeps 12 frames");
  if (kept) {
    const auto raw = testgen::approach_shot("long", 30);
    v.require(kept->features(0, 0) == raw.frames[18].x && kept->features(11, 0) == raw.frames[29].x,
              "kept frames are the last 12");
  }

  std::vector<std::string> ids;
  for (int i = 0; i < 20780; ++i) ids.push_back("shot" + std::to_string(i));
  const auto split = data::pareto_split(ids, 1);
  v.require(split.train_ids.size() == 16624 && split.test_ids.size() == 4156,
            "pareto split 16624/4156");

  const std::vector<double> ten(10, 1.0);
  const train::EarlyStopRule rule;
  v.require(train::early_stop_check(ten, 0.89, rule), "early stop fires at 0.89");
  v.require(!train::early_stop_check(ten, 0.95, rule), "early stop holds at 0.95");
  v.note("split " + std::to_string(split.train_ids.size()) + "/" +
         std::to_string(split.test_ids.size()));
  return v;
}

// --- 8 ---------------------------------------------------------------------

Verdict generation() {
  Verdict v;
  const auto& run = generate_run();
  const auto& model = run.fit.model;
  const auto& scaler = run.prep.scaler;
  const auto& test = run.prep.test_sequences;
  v.require(test.size() >= 100, "100 held-out shots");
  if (test.size() < 100) return v;

  const auto frames_of = [](const data::ShotSequence& s, std::size_t n) {
    std::vector<data::Frame> out;
    for (std::size_t t = 0; t < n; ++t) {
      out.push_back({s.features(t, 0), s.features(t, 1), s.features(t, 2), s.features(t, 3)});
    }
    return out;
  };

  gen::GenerateOptions shape;
  shape.branch_factor = 2;
  shape.steps = 3;
  const auto branches = gen::generate(model, scaler, frames_of(test[0], 9), shape);
  v.require(branches.trajectories.size() == 8, "K=2, S=3 gives 8 trajectories");

  std::size_t close = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto prefix = frames_of(test[i], 9);
    const auto mix = gen::next_point_mixture(model, scaler, prefix);
    const auto mode = gen::grid_mode(mix, 61, 3.0);
    const double err = std::hypot(mode[0] - test[i].features(9, 0), mode[1] - test[i].features(9, 1),
                                  mode[2] - test[i].features(9, 2));
    total += err;
    close += err <= 1.5;
  }
  v.require(close >= 80, "10th-point grid mode within 1.5 ft for >= 80% of shots");
  v.note(std::to_string(branches.trajectories.size()) + " trajectories; " + std::to_string(close) +
         "/100 within 1.5 ft, mean error " + fmt("%.3f", total / 100.0) + " ft");
  return v;
}

// --- 9 ---------------------------------------------------------------------

Verdict parameter_ordering() {
  Verdict v;
  const seq::ModelConfig cfg{2, 64, 3, 12, 4};
  const auto bi = seq::count_parameters(cfg);
  const auto uni = seq::count_unidirectional_parameters(cfg);
  v.require(seq::ModelParams::zeros(cfg).flatten().size() == bi, "constructed model matches count");
  v.require(bi < uni, "bidirectional < unidirectional");
  v.note("2x64 BLSTM-MDN " + std::to_string(bi) + " < LSTM-MDN " + std::to_string(uni));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"mixture math", mixture_math},
      {"sampler fidelity", sampler_fidelity},
      {"AUC oracle equivalence", auc_oracle},
      {"training progress", training_progress},
      {"distance trend", distance_trend},
      {"pipeline rules", pipeline_rules},
      {"generation", generation},
      {"parameter-count ordering", parameter_ordering},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Verdict verdict;
    try {
      verdict = criteria[k].second();
    } catch (const std::exception& e) {
      verdict.pass = false;
      verdict.detail = std::string("exception: ") + e.what();
    }
    failures += verdict.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s\n", verdict.pass ? "PASS" : "FAIL", id,
                criteria[k].first, verdict.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
