#pragma once

#include <vector>

#include "confclip/policy.hpp"
#include "confclip/rewards.hpp"
#include "confclip/tasks.hpp"

namespace confclip {

// One task's worth of rollouts with their scores. `degenerate` marks groups
// whose shaped rewards have (population) std at or below the guard; those
// groups get all-zero advantages and thus no policy gradient.
struct Group {
  TaskPrompt task;
  std::vector<Rollout> rollouts;
  std::vector<bool> correct;
  std::vector<double> shaped;
  std::vector<double> advantages;
  bool degenerate = false;

  int size() const { return static_cast<int>(rollouts.size()); }
};

struct TrainConfig {
  int group_size = 7;
  int batch_tasks = 16;
  double learning_rate = 5.0;
  double kl_coeff = 0.005;
  RewardSpec reward_spec{};
  int max_len = 6;
  int steps = 300;
  std::int64_t seed = 42;
  double std_guard = 1e-8;

  void validate() const;
};

struct StepStats {
  double grad_norm = 0.0;
  double mean_advantage = 0.0;
  int degenerate_groups = 0;
};

double population_std(const std::vector<double>& xs);

// (r_i - mean) / population std. Groups whose std is <= std_guard are
// degenerate and return all zeros.
std::vector<double> group_advantages(const std::vector<double>& shaped,
                                     double std_guard);

// Verifies and scores pre-sampled rollouts under one reward spec. Pure, so
// the same rollouts can be re-scored under a different spec for paired
// comparisons.
Group make_group(const TaskPrompt& task, std::vector<Rollout> rollouts,
                 const RewardSpec& spec, const Vocab& vocab, double std_guard);

// One gradient-ascent update of
//   (1/N) sum_groups sum_i [ A_i * log pi(y_i) - beta * KL(pi || ref) ],
// with the KL term summed over each rollout's visited contexts. Throws if
// any rollout is stale (off-policy) or the gradient is not finite.
StepStats policy_gradient_step(PolicyTable& policy, const PolicyTable& reference,
                               const std::vector<Group>& groups,
                               const TrainConfig& config);

double degenerate_fraction(const std::vector<Group>& groups);

}  // namespace confclip
