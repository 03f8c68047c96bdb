#include <benchmark/benchmark.h>

#include <vector>

#include "confclip/config.hpp"
#include "confclip/optim.hpp"
#include "confclip/oracle.hpp"
#include "confclip/policy.hpp"
#include "confclip/rng.hpp"
#include "confclip/tasks.hpp"
#include "confclip/trainer.hpp"

using namespace confclip;

namespace {

void randomize_reachable(PolicyTable& policy, const ContextKey& ctx, int depth,
                         Rng& rng) {
  for (TokenId t = 0; t < policy.vocab().size; ++t)
    policy.set_logit(ctx, t, 2.0 * uniform01(rng) - 1.0);
  if (depth <= 1) return;
  for (TokenId t = 0; t < policy.vocab().size; ++t) {
    if (t == policy.vocab().eos) continue;
    ContextKey next = ctx;
    next.push(t, policy.context_order());
    randomize_reachable(policy, next, depth - 1, rng);
  }
}

TaskPrompt bench_task() {
  TaskPrompt task;
  task.prompt_id = 1;
  task.a = 3;
  task.b = 4;
  task.op = Op::mul;
  task.modulus = 7;
  task.tier = Tier::hard;
  return task;
}

PolicyTable bench_policy(int vocab_size, int depth) {
  PolicyTable policy(Vocab::with_digits(vocab_size), 2);
  Rng rng(7);
  randomize_reachable(policy, policy.initial_context(bench_task().prompt_key()),
                      depth, rng);
  return policy;
}

}  // namespace

static void BM_SampleRollout(benchmark::State& state) {
  const PolicyTable policy = bench_policy(8, 4);
  const PromptKey prompt = bench_task().prompt_key();
  Rng rng(11);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_rollout(policy, prompt, rng, 6));
}
BENCHMARK(BM_SampleRollout);

static void BM_GradLogprob(benchmark::State& state) {
  const PolicyTable policy = bench_policy(8, 4);
  const PromptKey prompt = bench_task().prompt_key();
  Rng rng(11);
  const Rollout r = sample_rollout(policy, prompt, rng, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(grad_logprob(policy, prompt, r.tokens));
}
BENCHMARK(BM_GradLogprob);

static void BM_GroupAdvantages(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> rewards(static_cast<std::size_t>(state.range(0)));
  for (double& r : rewards) r = uniform01(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(group_advantages(rewards, 1e-8));
}
BENCHMARK(BM_GroupAdvantages)->Arg(7)->Arg(64);

static void BM_MakeGroup(benchmark::State& state) {
  const PolicyTable policy = bench_policy(8, 4);
  const TaskPrompt task = bench_task();
  Rng rng(5);
  std::vector<Rollout> rollouts;
  for (int g = 0; g < 7; ++g)
    rollouts.push_back(sample_rollout(policy, task.prompt_key(), rng, 6));
  const RewardSpec spec{RewardVariant::ConfClip, 0.2};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        make_group(task, rollouts, spec, policy.vocab(), 1e-8));
}
BENCHMARK(BM_MakeGroup);

// One full on-policy step at the default configuration: sample the batch,
// score it, apply the update. Rollouts are resampled every iteration because
// the update invalidates them; the policy keeps training across iterations,
// so lengths (and the per-step cost) drift toward the trained regime.
static void BM_TrainStep(benchmark::State& state) {
  ConfigFile cfg;
  const ExperimentManifest manifest = manifest_from_config(cfg);
  const TrainConfig tc = manifest.config;
  PolicyTable policy = manifest.init.make();
  const PolicyTable reference = policy;
  Rng batch_rng(mix_seed(static_cast<std::uint64_t>(tc.seed), 0xba7c4));

  int step = 0;
  for (auto _ : state) {
    ++step;
    std::vector<Group> groups;
    for (int t = 0; t < tc.batch_tasks; ++t) {
      const TaskPrompt& task =
          manifest.suite.tasks[uniform_index(batch_rng, manifest.suite.tasks.size())];
      std::vector<Rollout> rollouts;
      for (int g = 0; g < tc.group_size; ++g) {
        Rng rng(mix_seed(static_cast<std::uint64_t>(tc.seed),
                         static_cast<std::uint64_t>(step),
                         static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(g)));
        rollouts.push_back(sample_rollout(policy, task.prompt_key(), rng, tc.max_len));
      }
      groups.push_back(
          make_group(task, std::move(rollouts), tc.reward_spec, policy.vocab(),
                     tc.std_guard));
    }
    benchmark::DoNotOptimize(policy_gradient_step(policy, reference, groups, tc));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_BruteForceExpectedReward(benchmark::State& state) {
  const PolicyTable policy = bench_policy(8, 4);
  const TaskPrompt task = bench_task();
  const RewardSpec spec{RewardVariant::ConfClip, 0.2};
  const oracle::EnumerationBudget budget{4, 20000};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        oracle::brute_force_expected_reward(policy, task, spec, budget));
}
BENCHMARK(BM_BruteForceExpectedReward)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
