#pragma once

#include <span>
#include <string>
#include <vector>

#include "confclip/policy.hpp"
#include "confclip/vocab.hpp"

namespace confclip {

enum class Op { add, mul };
enum class Tier { easy, hard };
enum class Regime { easy, hard, mixed };

std::string to_string(Op op);
std::string to_string(Tier tier);
std::string to_string(Regime regime);
Regime regime_from_string(const std::string& s);

// One modular-arithmetic prompt. Easy tasks ask for a single answer digit,
// hard tasks require a scratch digit before the answer so that a uniform
// policy almost never stumbles onto the full pattern.
struct TaskPrompt {
  std::int64_t prompt_id = 0;
  int a = 0;
  int b = 0;
  Op op = Op::add;
  int modulus = 10;
  Tier tier = Tier::easy;

  // Conditioning key for the policy. Derived from task content, not from
  // prompt_id, so two suites with the same arithmetic share parameters.
  PromptKey prompt_key() const;

  // The digit tokens that must appear immediately before EOS.
  std::vector<TokenId> answer_window() const;
};

struct TaskSuite {
  std::vector<TaskPrompt> tasks;
  Regime regime = Regime::easy;
  std::int64_t seed = 0;
};

// Deterministic in (regime, n, seed, modulus). Mixed suites always contain
// at least one task of each tier, which requires n >= 2.
TaskSuite gen_task_suite(Regime regime, int n, std::int64_t seed,
                         int modulus = 10, std::int64_t id_base = 0);

// True iff the rollout reached EOS and the tokens directly before that EOS
// spell the task's answer window. Tokens before the window are ignored, so
// a correct answer cannot be invalidated by earlier noise. Truncated
// rollouts are always false.
bool verify(const TaskPrompt& task, const Rollout& rollout, const Vocab& vocab);

// Same check on a bare token sequence (used by the enumeration oracle).
bool verify_tokens(const TaskPrompt& task, std::span<const TokenId> tokens,
                   bool terminated, const Vocab& vocab);

void save_suite(const TaskSuite& suite, const std::string& path);
TaskSuite load_suite(const std::string& path);

}  // namespace confclip
