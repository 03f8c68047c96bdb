#pragma once

#include <string>
#include <vector>

#include "confclip/config.hpp"
#include "confclip/metrics.hpp"
#include "confclip/optim.hpp"
#include "confclip/policy.hpp"
#include "confclip/tasks.hpp"

namespace confclip {

// Seed used by the pinned comparison experiments (collapse demo default and
// the acceptance runs).
inline constexpr std::int64_t kReferenceSeed = 1;

struct PolicyInit {
  Vocab vocab = Vocab::with_digits(11);
  int context_order = 2;
  double default_logit = 0.0;

  PolicyTable make() const {
    return PolicyTable(vocab, context_order, default_logit);
  }
};

// Everything a training run needs. The eval suite must not share prompt_ids
// with the train suite; by default it holds the same task contents under
// fresh ids, so greedy evaluation probes what training actually taught
// without aliasing the training rows.
struct ExperimentManifest {
  TrainConfig config;
  PolicyInit init;
  TaskSuite suite;
  TaskSuite eval_suite;
  std::string metrics_path = "metrics.csv";
  MetricsFormat format = MetricsFormat::csv;
  int eval_every = 10;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_path;

  void validate() const;
};

ExperimentManifest manifest_from_config(const ConfigFile& config);

struct TrainResult {
  PolicyTable policy;
  std::vector<MetricsRecord> records;
};

// The on-policy loop: per step, draw batch_tasks tasks from the suite (with
// replacement), sample G rollouts each, score them under the reward spec,
// and apply one gradient step against the step-0 reference policy. Metrics
// stream to manifest.metrics_path as the run progresses. Fully determined
// by the manifest.
TrainResult run_training(const ExperimentManifest& manifest);

// Greedy-decode pass over a suite.
EvalReport evaluate(const PolicyTable& policy, const TaskSuite& suite, int max_len);

struct DemoRun {
  RewardVariant variant = RewardVariant::ConfClip;
  std::vector<MetricsRecord> records;
  EvalReport final_eval;
  // Smoothed sampled confidence at the final step (5-step trailing mean).
  double final_confidence = 0.0;
  std::string metrics_path;
};

struct ComparisonReport {
  DemoRun clip;     // ConfClip, epsilon 0.2
  DemoRun no_clip;  // ConfSign: the same reward with the clip removed
  double confidence_ratio = 0.0;  // clip.final_confidence / no_clip.final_confidence
};

// Trains the hard regime twice from the same seed, once with ConfClip and
// once with ConfSign, and reports the paired curves. This is the
// normalization-pathology demonstration: without the clip, all-wrong groups
// reward their least confident member, and confidence collapses.
ComparisonReport run_collapse_demo(std::int64_t seed, int steps,
                                   const std::string& out_prefix = "collapse");

}  // namespace confclip
