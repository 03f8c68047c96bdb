#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "confclip/policy.hpp"
#include "confclip/rewards.hpp"
#include "confclip/tasks.hpp"

namespace confclip::oracle {

// Guard against accidentally requesting an enumeration that cannot finish.
// Operations refuse to run unless V^max_len fits under max_paths.
struct EnumerationBudget {
  int max_len = 4;
  std::int64_t max_paths = 1000000;

  void check(const Vocab& vocab) const;
};

// One enumerated generation path. `tokens` aliases the enumerator's work
// buffer and is only valid inside the visitor call.
struct PathInfo {
  const std::vector<TokenId>& tokens;
  double logprob = 0.0;
  bool terminated = false;
  double prob = 0.0;
  double confidence = 0.0;
};

// Visits every sequence the sampler could produce: EOS-terminated sequences
// up to max_len tokens plus all truncated length-max_len sequences. Path
// probabilities sum to 1 by construction.
void enumerate_paths(const PolicyTable& policy, PromptKey prompt, int max_len,
                     const std::function<void(const PathInfo&)>& visit);

// Exact E[shaped reward] under the policy's sampling distribution.
double brute_force_expected_reward(const PolicyTable& policy,
                                   const TaskPrompt& task, const RewardSpec& spec,
                                   const EnumerationBudget& budget);

// Exact gradient of brute_force_expected_reward w.r.t. the logit table.
// Confidence-coupled specs make the reward itself depend on the parameters,
// so each path contributes p * (reward + slope * s / len) * grad_logprob,
// not just the plain score-function term.
GradMap exact_policy_gradient(const PolicyTable& policy, const TaskPrompt& task,
                              const RewardSpec& spec,
                              const EnumerationBudget& budget);

// Score-function gradient for an arbitrary parameter-independent path
// functional: sum over paths of p * reward(path) * grad_logprob(path).
GradMap exact_score_gradient(const PolicyTable& policy, PromptKey prompt,
                             int max_len,
                             const std::function<double(const PathInfo&)>& reward);

using Coord = std::pair<ContextKey, TokenId>;

// Central differences (f(x+h) - f(x-h)) / 2h at the given logit coordinates.
// h outside [1e-7, 1e-3] is rejected: larger steps lose accuracy, smaller
// ones drown in rounding.
std::vector<double> finite_diff_grad(
    const std::function<double(const PolicyTable&)>& f, const PolicyTable& policy,
    const std::vector<Coord>& coords, double h);

struct GradcheckReport {
  int trials = 0;
  int coords_checked = 0;
  int failures = 0;
  double max_rel_err = 0.0;
  std::string worst;

  bool ok() const { return failures == 0; }
};

// Randomized cross-check of the analytic gradients against finite
// differences: sequence log-prob gradients per trial, plus expected-reward
// gradients through the enumeration oracle on small instances. `corrupt`
// injects an error into the analytic side (negative control for the CLI).
GradcheckReport run_gradcheck(std::uint64_t seed, int trials, bool corrupt = false);

}  // namespace confclip::oracle
