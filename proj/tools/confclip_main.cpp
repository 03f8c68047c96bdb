#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "confclip/checkpoint.hpp"
#include "confclip/config.hpp"
#include "confclip/oracle.hpp"
#include "confclip/trainer.hpp"

namespace {

using namespace confclip;

struct CommonOpts {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<int> steps;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Config file (JSON)");
  cmd->add_option("--set", opts.overrides,
                  "Override a config key, e.g. --set reward.variant=Binary01")
      ->type_name("SECTION.KEY=VALUE");
  cmd->add_option("--seed", opts.seed, "Override run.seed");
  cmd->add_option("--steps", opts.steps, "Override run.steps");
}

ConfigFile resolve(const CommonOpts& opts) {
  std::vector<std::string> overrides = opts.overrides;
  if (opts.seed) overrides.push_back("run.seed=" + std::to_string(*opts.seed));
  if (opts.steps) overrides.push_back("run.steps=" + std::to_string(*opts.steps));
  return resolve_config(opts.config_path, overrides);
}

int cmd_train(const CommonOpts& opts, const std::string& checkpoint_path) {
  const ConfigFile cfg = resolve(opts);
  const ExperimentManifest manifest = manifest_from_config(cfg);
  TrainResult result = run_training(manifest);
  if (!checkpoint_path.empty()) save_policy(result.policy, checkpoint_path);
  const EvalReport eval =
      evaluate(result.policy, manifest.eval_suite, cfg.max_len);
  std::printf(
      "train done: steps=%d accuracy=%.6g mean_confidence=%.6g "
      "mean_length=%.6g metrics=%s\n",
      cfg.steps, eval.accuracy, eval.mean_confidence, eval.mean_length,
      cfg.metrics_path.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path) {
  const ConfigFile cfg = resolve(opts);
  const PolicyTable policy = load_policy(checkpoint_path);
  const TaskSuite suite = gen_task_suite(cfg.regime, cfg.task_n, cfg.task_seed,
                                         cfg.modulus, cfg.task_n);
  for (const TaskPrompt& t : suite.tasks)
    for (TokenId tok : t.answer_window())
      if (tok >= policy.vocab().eos)
        throw std::invalid_argument(
            "checkpoint vocabulary too small for this task suite");
  const EvalReport eval = evaluate(policy, suite, cfg.max_len);
  std::printf(
      "{\"accuracy\":%.6g,\"mean_length\":%.6g,\"mean_confidence\":%.6g}\n",
      eval.accuracy, eval.mean_length, eval.mean_confidence);
  return 0;
}

int cmd_collapse_demo(std::int64_t seed, int steps, const std::string& prefix) {
  const ComparisonReport report = run_collapse_demo(seed, steps, prefix);
  std::printf("collapse-demo seed=%lld steps=%d\n", static_cast<long long>(seed),
              steps);
  std::printf(
      "confclip: final_confidence=%.6g final_accuracy=%.6g metrics=%s\n",
      report.clip.final_confidence, report.clip.final_eval.accuracy,
      report.clip.metrics_path.c_str());
  std::printf(
      "confsign: final_confidence=%.6g final_accuracy=%.6g metrics=%s\n",
      report.no_clip.final_confidence, report.no_clip.final_eval.accuracy,
      report.no_clip.metrics_path.c_str());
  std::printf("confidence_ratio=%.6g\n", report.confidence_ratio);
  return 0;
}

int cmd_gradcheck(std::int64_t seed, int trials, bool corrupt) {
  const oracle::GradcheckReport report =
      oracle::run_gradcheck(static_cast<std::uint64_t>(seed), trials, corrupt);
  std::printf("gradcheck seed=%lld trials=%d coords=%d max_rel_err=%.3g: %s\n",
              static_cast<long long>(seed), report.trials, report.coords_checked,
              report.max_rel_err, report.ok() ? "PASS" : "FAIL");
  if (!report.ok()) {
    std::fprintf(stderr, "error: gradient mismatch (%d failures); worst: %s\n",
                 report.failures, report.worst.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-relative policy optimization lab with clipped "
               "confidence-shaped rewards"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  std::string train_checkpoint;
  CLI::App* train = app.add_subcommand("train", "Run a training experiment");
  add_common(train, train_opts);
  train->add_option("--checkpoint", train_checkpoint,
                    "Write the final policy to this path");

  CommonOpts eval_opts;
  std::string eval_checkpoint;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved policy");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_checkpoint, "Policy checkpoint to load")
      ->required();

  std::int64_t demo_seed = kReferenceSeed;
  int demo_steps = 500;
  std::string demo_prefix = "collapse";
  CLI::App* demo = app.add_subcommand(
      "collapse-demo", "Train ConfClip vs ConfSign on the hard regime");
  demo->add_option("--seed", demo_seed, "Run seed");
  demo->add_option("--steps", demo_steps, "Training steps (>= 100)");
  demo->add_option("--out-prefix", demo_prefix, "Metrics file prefix");

  std::int64_t gc_seed = 0;
  int gc_trials = 100;
  bool gc_corrupt = false;
  CLI::App* gc = app.add_subcommand(
      "gradcheck", "Check analytic gradients against finite differences");
  gc->add_option("--seed", gc_seed, "Instance generator seed");
  gc->add_option("--trials", gc_trials, "Number of random instances");
  gc->add_flag("--corrupt", gc_corrupt,
               "Deliberately break the analytic side (negative control)")
      ->group("");  // hidden from help

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(train_opts, train_checkpoint);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_checkpoint);
    if (demo->parsed())
      return cmd_collapse_demo(demo_seed, demo_steps, demo_prefix);
    if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_trials, gc_corrupt);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
