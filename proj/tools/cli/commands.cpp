#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "hoopnet/checkpoint.hpp"
#include "hoopnet/errors.hpp"
#include "hoopnet/evalkit.hpp"
#include "hoopnet/fileio.hpp"

namespace hoopnet::cli {
namespace fs = std::filesystem;

namespace {

void echo_config(const RunConfig& cfg) {
  write_file_atomically(cfg.out / kResolvedConfigFile, [&](std::ostream& o) { cfg.write(o); });
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::size_t count_hits(const std::vector<data::RawShot>& shots) {
  return static_cast<std::size_t>(std::count_if(shots.begin(), shots.end(), [](const auto& s) {
    return s.label == data::ShotLabel::kHit;
  }));
}

train::PreparedData prepare(const RunConfig& cfg, const std::vector<data::RawShot>& shots) {
  auto prepared = train::prepare_dataset(shots, cfg.court, cfg.cutoff_ft, cfg.seed);
  if (prepared.dataset.train.empty() || prepared.dataset.validation.empty()) {
    throw SchemaError("not enough sequences survive the " + fmt(cfg.cutoff_ft) + " ft cutoff");
  }
  return prepared;
}

seq::ModelParams fresh_model(const RunConfig& cfg) {
  cfg.model.validate();
  num::SeededRng rng = num::SeededRng(cfg.seed).split(num::Stream::kInit);
  return seq::ModelParams::init_uniform(cfg.model, rng);
}

std::string cutoff_tag(double cutoff) {
  std::string s = fmt(cutoff, "%g");
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

}  // namespace

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const auto shots = data::synth_generate(cfg.synth, cfg.court);
  data::save_csv(cfg.out / kShotsFile, shots);
  echo_config(cfg);

  data::PrepStats stats;
  data::prepare_sequences(shots, cfg.court, cfg.cutoff_ft, &stats);
  std::set<std::string> ids;
  for (const auto& s : shots) ids.insert(s.shot_id);
  const std::size_t hits = count_hits(shots);
  log << "shots=" << shots.size() << " distinct_ids=" << ids.size() << " hits=" << hits
      << " hit_rate=" << fmt(static_cast<double>(hits) / static_cast<double>(shots.size()))
      << " simulated=" << cfg.synth.n_shots << " invalid_skipped=" << cfg.synth.n_shots - shots.size()
      << " drop_candidates=" << stats.dropped << " cutoff_ft=" << fmt(cfg.cutoff_ft) << '\n';
  return kExitOk;
}

int cmd_prep(const RunConfig& cfg, const fs::path& data_csv, std::ostream& log) {
  const auto shots = data::load_csv(data_csv);
  const auto prepared = prepare(cfg, shots);
  write_file_atomically(cfg.out / "train_sequences.csv", [&](std::ostream& o) {
    data::write_sequences_csv(o, prepared.train_sequences);
  });
  write_file_atomically(cfg.out / "test_sequences.csv", [&](std::ostream& o) {
    data::write_sequences_csv(o, prepared.test_sequences);
  });
  write_file_atomically(cfg.out / kScalerFile,
                        [&](std::ostream& o) { data::write_scaler(o, prepared.scaler); });
  echo_config(cfg);
  log << "input_shots=" << prepared.stats.input_shots << " kept=" << prepared.stats.kept
      << " dropped=" << prepared.stats.dropped << " train=" << prepared.train_sequences.size()
      << " test=" << prepared.test_sequences.size() << " cutoff_ft=" << fmt(cfg.cutoff_ft) << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const fs::path& data_csv, std::ostream& log) {
  const auto shots = data::load_csv(data_csv);
  const auto prepared = prepare(cfg, shots);
  const auto fitted = train::fit(fresh_model(cfg), prepared.dataset, cfg.train);

  seq::save_checkpoint(cfg.out / kModelFile, fitted.model);
  write_file_atomically(cfg.out / kScalerFile,
                        [&](std::ostream& o) { data::write_scaler(o, prepared.scaler); });
  write_file_atomically(cfg.out / kTrainReportFile,
                        [&](std::ostream& o) { fitted.report.write_csv(o); });
  const std::string summary = fitted.report.summary_line() +
                              " parameter_count=" + std::to_string(fitted.model.parameter_count()) +
                              " train_sequences=" + std::to_string(prepared.dataset.train.size()) +
                              " val_sequences=" + std::to_string(prepared.dataset.validation.size());
  write_file_atomically(cfg.out / kSummaryFile, [&](std::ostream& o) { o << summary << '\n'; });
  echo_config(cfg);
  log << summary << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& data_csv,
             const std::optional<fs::path>& checkpoint_dir, std::ostream& log) {
  const auto shots = data::load_csv(data_csv);
  if (checkpoint_dir) {
    const auto model = seq::load_checkpoint(*checkpoint_dir / kModelFile);
    std::ifstream scaler_in(*checkpoint_dir / kScalerFile);
    if (!scaler_in) throw IoError("cannot open " + (*checkpoint_dir / kScalerFile).string());
    const auto scaler = data::read_scaler(scaler_in);
    const auto prepared = prepare(cfg, shots);
    std::vector<seq::TrainingSample> test;
    for (const auto& s : prepared.test_sequences) test.push_back(train::make_sample(s, scaler));
    const auto roc = eval::roc_auc(eval::classifier_scores(model, test), eval::labels_of(test));
    write_file_atomically(cfg.out / "roc.csv", [&](std::ostream& o) { roc.write_csv(o); });
    echo_config(cfg);
    log << "cutoff_ft=" << fmt(cfg.cutoff_ft) << " test_sequences=" << test.size()
        << " auc=" << fmt(roc.auc) << '\n';
    return kExitOk;
  }

  eval::SweepOptions options;
  options.cutoffs = cfg.sweep_cutoffs;
  options.model = cfg.model;
  options.train = cfg.train;
  options.include_baseline = cfg.sweep_baseline;
  options.min_sequences = cfg.sweep_min_sequences;
  options.seed = cfg.seed;
  std::vector<eval::SweepCutoffResult> curves;
  const auto report = eval::distance_sweep(shots, cfg.court, options, &curves);
  write_file_atomically(cfg.out / "distance_report.csv", [&](std::ostream& o) { report.write_csv(o); });
  for (const auto& c : curves) {
    write_file_atomically(cfg.out / ("roc_" + cutoff_tag(c.cutoff_ft) + "ft.csv"),
                          [&](std::ostream& o) { c.roc.write_csv(o); });
  }
  echo_config(cfg);
  for (const auto& r : report.rows) {
    log << "cutoff_ft=" << fmt(r.cutoff_ft) << " model=" << r.model
        << " auc=" << (r.auc ? fmt(*r.auc) : std::string("n/a")) << " best_epoch=" << r.best_epoch
        << " sequences=" << r.sequences << " wall_seconds=" << fmt(r.wall_seconds)
        << (r.insufficient_data ? " status=insufficient_data" : "") << '\n';
  }
  return kExitOk;
}

int cmd_search(const RunConfig& cfg, const fs::path& data_csv, std::ostream& log) {
  const auto shots = data::load_csv(data_csv);
  const auto prepared = prepare(cfg, shots);
  const auto trials =
      train::search(cfg.search_space, cfg.search, cfg.model, cfg.train, prepared.dataset);

  std::set<std::string> keys;
  for (const auto& t : trials) {
    for (const auto& [k, v] : t.params) keys.insert(k);
  }
  write_file_atomically(cfg.out / "search_trials.csv", [&](std::ostream& o) {
    o << "rank,trial";
    for (const auto& k : keys) o << ',' << k;
    o << ',' << (cfg.train.task == train::Task::kClassify ? "val_auc" : "val_nll")
      << ",score,parameter_count,best_epoch,stop_epoch,wall_seconds\n";
    for (std::size_t r = 0; r < trials.size(); ++r) {
      const auto& t = trials[r];
      o << r + 1 << ',' << t.index;
      for (const auto& k : keys) {
        const auto it = t.params.find(k);
        o << ',' << (it == t.params.end() ? std::string() : fmt(it->second, "%.17g"));
      }
      o << ',' << fmt(t.metric, "%.17g") << ',' << fmt(t.score, "%.17g") << ',' << t.parameter_count
        << ',' << t.report.best_epoch << ',' << t.report.stop_epoch << ','
        << fmt(t.report.wall_seconds, "%.17g") << '\n';
    }
  });
  echo_config(cfg);
  log << "trials=" << trials.size();
  if (!trials.empty()) {
    log << " best_trial=" << trials.front().index << " best_metric=" << fmt(trials.front().metric);
    for (const auto& [k, v] : trials.front().params) log << " " << k << "=" << fmt(v);
  }
  log << '\n';
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg, const GenerateArgs& args, std::ostream& log) {
  const auto model = seq::load_checkpoint(args.checkpoint_dir / kModelFile);
  std::ifstream scaler_in(args.checkpoint_dir / kScalerFile);
  if (!scaler_in) throw IoError("cannot open " + (args.checkpoint_dir / kScalerFile).string());
  const auto scaler = data::read_scaler(scaler_in);

  const auto shots = data::load_csv(args.prefix_csv);
  if (shots.empty()) throw SchemaError("prefix file holds no shots");
  auto prefix = data::rim_relative(shots.front(), cfg.court).frames;
  if (args.prefix_frames) {
    if (*args.prefix_frames > prefix.size()) {
      throw DomainError("prefix file has " + std::to_string(prefix.size()) + " frames, fewer than " +
                        std::to_string(*args.prefix_frames));
    }
    prefix.resize(*args.prefix_frames);
  }
  const auto result = gen::generate(model, scaler, prefix, cfg.generate);

  write_file_atomically(cfg.out / "trajectories.csv",
                        [&](std::ostream& o) { gen::write_trajectories_csv(o, result); });
  for (const auto& d : result.densities) {
    const std::string name = "density_step" + std::to_string(d.step) + "_node" +
                             std::to_string(d.node) + "_" + mdn::plane_name(d.grid.plane) + ".csv";
    write_file_atomically(cfg.out / name, [&](std::ostream& o) { mdn::write_density_csv(o, d.grid); });
  }
  echo_config(cfg);
  log << "shot_id=" << shots.front().shot_id << " prefix_frames=" << prefix.size()
      << " branch=" << cfg.generate.branch_factor << " steps=" << cfg.generate.steps
      << " trajectories=" << result.trajectories.size() << " density_grids=" << result.densities.size()
      << '\n';
  return kExitOk;
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& log) {
  seq::GradCheckOptions options;
  if (args.corrupt_tensor) {
    const std::string name = *args.corrupt_tensor;
    options.focus_tensor = name;
    options.corrupt_gradient = [name](seq::ModelParams& grads) {
      for (auto& t : grads.tensors()) {
        if (t.name == name) (*t.tensor)(0, 0) += 1e-3 + 0.01 * std::abs((*t.tensor)(0, 0));
      }
    };
  }
  const auto report = seq::gradient_check(args.seed, options);
  const auto& w = report.worst;
  log << "seed=" << args.seed << " coordinates=" << report.coordinates.size()
      << " step=" << fmt(options.step) << " tolerance=" << fmt(options.tolerance)
      << " max_rel_error=" << fmt(report.max_rel_error) << " worst=" << w.tensor << "[" << w.row << ","
      << w.col << "] analytic=" << fmt(w.analytic, "%.10g") << " numeric=" << fmt(w.numeric, "%.10g")
      << " result=" << (report.passed ? "pass" : "fail") << '\n';
  return report.passed ? kExitOk : kExitCheckFailed;
}

}  // namespace hoopnet::cli
