// Argument parsing and exception-to-exit-code mapping for the hoop tool.

#include <CLI11.hpp>

#include <ostream>
#include <vector>

#include "commands.hpp"
#include "hoopnet/errors.hpp"

namespace hoopnet::cli {
namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "overrides the config seed");
  cmd->add_option("--out", args.out, "output directory (overrides config 'out')");
  cmd->add_option("--set", args.overrides, "extra key=value override, repeatable");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config.empty()) cfg.apply_file(args.config);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw SchemaError("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    cfg.set(key, kv.substr(eq + 1));
  }
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  cfg.resolve();
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bidirectional LSTM + mixture density model for basketball shot trajectories"};
  app.require_subcommand(1);
  app.footer("Configuration keys (defaults shown):\n" + RunConfig::describe_keys() +
             "\nExit codes: 0 success, 1 check failure, 2 input/schema error, 3 training divergence.");

  CommonArgs common;
  std::string data_csv;
  std::string checkpoint;
  std::string prefix_csv;
  std::optional<std::size_t> prefix_frames, branch, steps;
  std::optional<double> force_sigma_raw;
  std::string task;
  std::optional<std::size_t> epochs, n_shots;
  std::optional<double> cutoff;
  std::optional<std::string> corrupt;
  std::uint64_t gradcheck_seed = 1;

  auto* synth = app.add_subcommand("synth", "simulate shots and write shots.csv");
  add_common(synth, common);
  synth->add_option("--n-shots", n_shots, "number of shots");

  auto* prep = app.add_subcommand("prep", "rim-relative 12-frame sequences, split and scaler");
  add_common(prep, common);
  prep->add_option("--data", data_csv, "shot CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--cutoff", cutoff, "distance cutoff, feet");

  auto* train_cmd = app.add_subcommand("train", "fit a model; writes model.bin and train_report.csv");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", data_csv, "shot CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--task", task, "classify or generate");
  train_cmd->add_option("--epochs", epochs, "maximum epochs");
  train_cmd->add_option("--cutoff", cutoff, "distance cutoff, feet");

  auto* eval_cmd = app.add_subcommand("eval", "AUC-by-distance sweep, or ROC of a trained classifier");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--data", data_csv, "shot CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", checkpoint, "directory holding model.bin and scaler.txt");
  eval_cmd->add_option("--epochs", epochs, "maximum epochs per sweep fit");
  eval_cmd->add_option("--cutoff", cutoff, "cutoff for checkpoint evaluation, feet");

  auto* search_cmd = app.add_subcommand("search", "grid or random hyperparameter search");
  add_common(search_cmd, common);
  search_cmd->add_option("--data", data_csv, "shot CSV")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--task", task, "classify or generate");

  auto* gen_cmd = app.add_subcommand("generate", "branching next-point generation with density grids");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--checkpoint", checkpoint, "directory holding model.bin and scaler.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--prefix", prefix_csv, "shot CSV; the first shot is the observed prefix")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--prefix-frames", prefix_frames, "use only the first N frames of the shot");
  gen_cmd->add_option("-K,--branch", branch, "samples per trajectory per step");
  gen_cmd->add_option("-S,--steps", steps, "points to generate");
  gen_cmd->add_option("--force-sigma-raw", force_sigma_raw,
                      "test hook: set every sigma to exp(value) after normalization")
      ->group("");

  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  grad_cmd->add_option("--seed", gradcheck_seed, "seed for the random model and batch");
  grad_cmd->add_option("--corrupt", corrupt, "test hook: perturb this tensor's analytic gradient")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (grad_cmd->parsed()) return cmd_gradcheck({gradcheck_seed, corrupt}, out);

    RunConfig cfg = resolve_config(common);
    if (n_shots) cfg.synth.n_shots = *n_shots;
    if (cutoff) cfg.cutoff_ft = *cutoff;
    if (epochs) cfg.train.epochs = *epochs;
    if (!task.empty()) cfg.set("train.task", task);
    if (branch) cfg.generate.branch_factor = *branch;
    if (steps) cfg.generate.steps = *steps;
    if (force_sigma_raw) cfg.generate.force_sigma_raw = *force_sigma_raw;

    if (synth->parsed()) return cmd_synth(cfg, out);
    if (prep->parsed()) return cmd_prep(cfg, data_csv, out);
    if (train_cmd->parsed()) return cmd_train(cfg, data_csv, out);
    if (eval_cmd->parsed()) {
      std::optional<std::filesystem::path> ckpt;
      if (!checkpoint.empty()) ckpt = checkpoint;
      return cmd_eval(cfg, data_csv, ckpt, out);
    }
    if (search_cmd->parsed()) return cmd_search(cfg, data_csv, out);
    if (gen_cmd->parsed()) return cmd_generate(cfg, {checkpoint, prefix_csv, prefix_frames}, out);
  } catch (const TrainingError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const OracleError& e) {
    err << "check failed: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace hoopnet::cli
