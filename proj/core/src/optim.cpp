#include "confclip/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace confclip {

void TrainConfig::validate() const {
  if (group_size < 2)
    throw std::invalid_argument("TrainConfig: group_size must be >= 2");
  if (batch_tasks < 1)
    throw std::invalid_argument("TrainConfig: batch_tasks must be >= 1");
  if (!(learning_rate >= 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be non-negative");
  if (kl_coeff < 0.0)
    throw std::invalid_argument("TrainConfig: kl_coeff must be non-negative");
  if (max_len < 1)
    throw std::invalid_argument("TrainConfig: max_len must be >= 1");
  if (steps < 0)
    throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (!(std_guard > 0.0))
    throw std::invalid_argument("TrainConfig: std_guard must be positive");
  reward_spec.validate();
}

double population_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / n);
}

std::vector<double> group_advantages(const std::vector<double>& shaped,
                                     double std_guard) {
  if (shaped.size() < 2)
    throw std::invalid_argument("group_advantages: need at least 2 rewards");
  if (!(std_guard > 0.0))
    throw std::invalid_argument("group_advantages: std_guard must be positive");
  const double sd = population_std(shaped);
  if (sd <= std_guard) return std::vector<double>(shaped.size(), 0.0);
  double mean = 0.0;
  for (double x : shaped) mean += x;
  mean /= static_cast<double>(shaped.size());
  std::vector<double> adv(shaped.size());
  for (std::size_t i = 0; i < shaped.size(); ++i) adv[i] = (shaped[i] - mean) / sd;
  return adv;
}

Group make_group(const TaskPrompt& task, std::vector<Rollout> rollouts,
                 const RewardSpec& spec, const Vocab& vocab, double std_guard) {
  if (rollouts.size() < 2)
    throw std::invalid_argument("make_group: need at least 2 rollouts");
  Group g;
  g.task = task;
  g.rollouts = std::move(rollouts);
  g.correct.reserve(g.rollouts.size());
  g.shaped.reserve(g.rollouts.size());
  for (const Rollout& r : g.rollouts) {
    const bool ok = verify(task, r, vocab);
    g.correct.push_back(ok);
    g.shaped.push_back(shape_reward(spec, ok, confidence(r)));
  }
  g.advantages = group_advantages(g.shaped, std_guard);
  g.degenerate = population_std(g.shaped) <= std_guard;
  return g;
}

namespace {

// d KL(p||q) / d logit_b = p_b * (log p_b - log q_b - KL), per context.
void accumulate_kl_grad(GradMap& acc, const PolicyTable& policy,
                        const PolicyTable& reference, const ContextKey& ctx,
                        double scale) {
  const std::vector<double> lp = policy.log_probs(ctx);
  const std::vector<double> lq = reference.log_probs(ctx);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a)
    kl += std::exp(lp[a]) * (lp[a] - lq[a]);
  auto it = acc.find(ctx);
  if (it == acc.end())
    it = acc.emplace(ctx, std::vector<double>(lp.size(), 0.0)).first;
  auto& row = it->second;
  for (std::size_t b = 0; b < lp.size(); ++b)
    row[b] += scale * std::exp(lp[b]) * (lp[b] - lq[b] - kl);
}

}  // namespace

StepStats policy_gradient_step(PolicyTable& policy, const PolicyTable& reference,
                               const std::vector<Group>& groups,
                               const TrainConfig& config) {
  config.validate();
  if (groups.empty())
    throw std::invalid_argument("policy_gradient_step: groups must be non-empty");

  std::size_t total = 0;
  for (const Group& g : groups) total += g.rollouts.size();
  const double inv_n = 1.0 / static_cast<double>(total);

  GradMap grad;
  StepStats stats;
  for (const Group& g : groups) {
    if (g.degenerate) ++stats.degenerate_groups;
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const Rollout& r = g.rollouts[i];
      if (r.policy_version != policy.version())
        throw std::invalid_argument(
            "policy_gradient_step: rollout sampled from stale parameters "
            "(version " + std::to_string(r.policy_version) + ", policy at " +
            std::to_string(policy.version()) + ")");
      stats.mean_advantage += g.advantages[i];
      const PromptKey prompt = g.task.prompt_key();
      if (g.advantages[i] != 0.0) {
        const GradMap glp = grad_logprob(policy, prompt, r.tokens);
        axpy(grad, glp, inv_n * g.advantages[i], policy.vocab().size);
      }
      if (config.kl_coeff > 0.0) {
        ContextKey ctx = policy.initial_context(prompt);
        for (TokenId tok : r.tokens) {
          accumulate_kl_grad(grad, policy, reference, ctx,
                             -config.kl_coeff * inv_n);
          ctx.push(tok, policy.context_order());
        }
      }
    }
  }
  stats.mean_advantage *= inv_n;

  if (!all_finite(grad))
    throw std::runtime_error(
        "policy_gradient_step: non-finite gradient entry; refusing to update");
  stats.grad_norm = l2_norm(grad);
  policy.add_scaled(grad, config.learning_rate);
  return stats;
}

double degenerate_fraction(const std::vector<Group>& groups) {
  if (groups.empty())
    throw std::invalid_argument("degenerate_fraction: groups must be non-empty");
  int n = 0;
  for (const Group& g : groups) n += g.degenerate ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(groups.size());
}

}  // namespace confclip
