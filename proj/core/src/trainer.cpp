#include "confclip/trainer.hpp"

#include <set>
#include <stdexcept>
#include <utility>

#include "confclip/checkpoint.hpp"
#include "confclip/rewards.hpp"
#include "confclip/rng.hpp"
#include "confclip/threads.hpp"

namespace confclip {

void ExperimentManifest::validate() const {
  config.validate();
  if (suite.tasks.empty())
    throw std::invalid_argument("manifest: train suite is empty");
  if (eval_suite.tasks.empty())
    throw std::invalid_argument("manifest: eval suite is empty");
  std::set<std::int64_t> train_ids;
  for (const TaskPrompt& t : suite.tasks) train_ids.insert(t.prompt_id);
  if (train_ids.size() != suite.tasks.size())
    throw std::invalid_argument("manifest: duplicate prompt_id in train suite");
  for (const TaskPrompt& t : eval_suite.tasks)
    if (train_ids.count(t.prompt_id))
      throw std::invalid_argument(
          "manifest: train and eval suites share prompt_id " +
          std::to_string(t.prompt_id));
  for (const TaskPrompt& t : suite.tasks)
    for (TokenId tok : t.answer_window())
      if (tok >= init.vocab.eos)
        throw std::invalid_argument(
            "manifest: answer digit collides with EOS; raise policy V");
  if (metrics_path.empty())
    throw std::invalid_argument("manifest: metrics_path is empty");
  if (eval_every < 1)
    throw std::invalid_argument("manifest: eval_every must be >= 1");
  if (checkpoint_every < 0)
    throw std::invalid_argument("manifest: checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty())
    throw std::invalid_argument(
        "manifest: checkpoint_every set but checkpoint_path is empty");
}

ExperimentManifest manifest_from_config(const ConfigFile& config) {
  config.validate();
  ExperimentManifest m;
  m.config = config.train_config();
  m.init.vocab = config.vocab();
  m.init.context_order = config.context_order;
  m.init.default_logit = config.default_logit;
  m.suite = gen_task_suite(config.regime, config.task_n, config.task_seed,
                           config.modulus, 0);
  // Same contents, disjoint ids: evaluation reads back what training wrote.
  m.eval_suite = gen_task_suite(config.regime, config.task_n, config.task_seed,
                                config.modulus, config.task_n);
  m.metrics_path = config.metrics_path;
  m.format = config.format;
  m.eval_every = config.eval_every;
  return m;
}

TrainResult run_training(const ExperimentManifest& manifest) {
  manifest.validate();
  const TrainConfig& cfg = manifest.config;
  PolicyTable policy = manifest.init.make();
  const PolicyTable reference = policy;  // frozen at step 0

  MetricsWriter writer(manifest.metrics_path, manifest.format);
  std::vector<MetricsRecord> records;
  records.reserve(cfg.steps);

  Rng batch_rng(mix_seed(static_cast<std::uint64_t>(cfg.seed), 0xba7c4));

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<const TaskPrompt*> batch(cfg.batch_tasks);
    for (int t = 0; t < cfg.batch_tasks; ++t)
      batch[t] =
          &manifest.suite.tasks[uniform_index(batch_rng, manifest.suite.tasks.size())];

    // Per-rollout seeds keyed by (step, task slot, rollout slot) make the
    // sample independent of scheduling.
    std::vector<Rollout> rollouts(
        static_cast<std::size_t>(cfg.batch_tasks) * cfg.group_size);
    parallel_for(rollouts.size(), [&](std::size_t idx) {
      const int t = static_cast<int>(idx) / cfg.group_size;
      const int g = static_cast<int>(idx) % cfg.group_size;
      Rng rng(mix_seed(static_cast<std::uint64_t>(cfg.seed), step, t, g));
      rollouts[idx] =
          sample_rollout(policy, batch[t]->prompt_key(), rng, cfg.max_len);
    });

    std::vector<Group> groups;
    groups.reserve(cfg.batch_tasks);
    for (int t = 0; t < cfg.batch_tasks; ++t) {
      std::vector<Rollout> mine(
          rollouts.begin() + static_cast<std::ptrdiff_t>(t) * cfg.group_size,
          rollouts.begin() + static_cast<std::ptrdiff_t>(t + 1) * cfg.group_size);
      groups.push_back(make_group(*batch[t], std::move(mine), cfg.reward_spec,
                                  policy.vocab(), cfg.std_guard));
    }

    try {
      policy_gradient_step(policy, reference, groups, cfg);
    } catch (const std::runtime_error& e) {
      // Numeric failure: leave the offending parameters on disk for a
      // post-mortem, then surface the error.
      const std::string dump = manifest.metrics_path + ".crash-policy";
      save_policy(policy, dump);
      throw std::runtime_error("step " + std::to_string(step) + ": " + e.what() +
                               " (policy dumped to '" + dump + "')");
    }

    std::optional<EvalReport> eval;
    if (step % manifest.eval_every == 0 || step == cfg.steps)
      eval = evaluate(policy, manifest.eval_suite, cfg.max_len);
    const MetricsRecord rec = metrics::record(step, groups, eval);
    writer.write(rec);
    records.push_back(rec);

    if (manifest.checkpoint_every > 0 && step % manifest.checkpoint_every == 0)
      save_policy(policy, manifest.checkpoint_path);
  }

  return TrainResult{std::move(policy), std::move(records)};
}

EvalReport evaluate(const PolicyTable& policy, const TaskSuite& suite,
                    int max_len) {
  if (suite.tasks.empty())
    throw std::invalid_argument("evaluate: suite is empty");
  EvalReport report;
  for (const TaskPrompt& task : suite.tasks) {
    const Rollout r = greedy_decode(policy, task.prompt_key(), max_len);
    report.accuracy += verify(task, r, policy.vocab()) ? 1.0 : 0.0;
    report.mean_length += static_cast<double>(r.length());
    report.mean_confidence += confidence(r);
  }
  const double inv = 1.0 / static_cast<double>(suite.tasks.size());
  report.accuracy *= inv;
  report.mean_length *= inv;
  report.mean_confidence *= inv;
  return report;
}

namespace {

// Hard-regime setup shared by both arms of the collapse demonstration. The
// vocabulary is padded well past the digits so a maximum-entropy policy
// sits at confidence 1/16; that leaves an order of magnitude of visible
// headroom between a stable run and a collapsed one.
ConfigFile collapse_demo_config(std::int64_t seed, int steps,
                                const std::string& metrics_path) {
  ConfigFile cfg;
  cfg.vocab_size = 16;
  cfg.context_order = 2;
  cfg.regime = Regime::hard;
  cfg.task_n = 6;
  cfg.modulus = 10;
  cfg.task_seed = 7;
  cfg.group_size = 7;
  cfg.batch_tasks = 16;
  cfg.learning_rate = 5.0;
  cfg.kl_coeff = 0.005;
  cfg.steps = steps;
  cfg.max_len = 6;
  cfg.run_seed = seed;
  cfg.metrics_path = metrics_path;
  cfg.eval_every = 10;
  return cfg;
}

DemoRun demo_arm(const ConfigFile& base, RewardVariant variant) {
  ConfigFile cfg = base;
  cfg.reward.variant = variant;
  cfg.reward.epsilon = 0.2;
  const ExperimentManifest manifest = manifest_from_config(cfg);
  TrainResult result = run_training(manifest);

  DemoRun run;
  run.variant = variant;
  run.records = std::move(result.records);
  run.final_eval = evaluate(result.policy, manifest.eval_suite, cfg.max_len);
  std::vector<double> conf;
  conf.reserve(run.records.size());
  for (const MetricsRecord& r : run.records) conf.push_back(r.confidence_mean);
  const std::vector<double> smooth = metrics::moving_average(conf, 5);
  run.final_confidence = smooth.empty() ? 0.0 : smooth.back();
  run.metrics_path = cfg.metrics_path;
  return run;
}

}  // namespace

ComparisonReport run_collapse_demo(std::int64_t seed, int steps,
                                   const std::string& out_prefix) {
  if (steps < 100)
    throw std::invalid_argument("run_collapse_demo: steps must be >= 100");
  const ConfigFile clip_cfg =
      collapse_demo_config(seed, steps, out_prefix + "-confclip.csv");
  const ConfigFile noclip_cfg =
      collapse_demo_config(seed, steps, out_prefix + "-confsign.csv");

  ComparisonReport report;
  report.clip = demo_arm(clip_cfg, RewardVariant::ConfClip);
  report.no_clip = demo_arm(noclip_cfg, RewardVariant::ConfSign);
  report.confidence_ratio =
      report.clip.final_confidence / report.no_clip.final_confidence;
  return report;
}

}  // namespace confclip
