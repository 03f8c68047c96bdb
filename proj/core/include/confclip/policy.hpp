#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "confclip/context.hpp"
#include "confclip/rng.hpp"
#include "confclip/vocab.hpp"

namespace confclip {

// One sampled answer sequence. `tokens` holds only generated tokens (the
// prompt is conditioning, not content) and includes the EOS token when one
// was emitted; `terminated` distinguishes EOS-terminated sequences from
// ones truncated at max_len. Log-probabilities are recorded at sampling
// time, which is what makes downstream confidence scores on-policy.
struct Rollout {
  std::vector<TokenId> tokens;
  std::vector<double> token_logprobs;
  bool terminated = false;
  std::uint64_t policy_version = 0;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Sparse parameter-shaped accumulator: one dense logit row per touched
// context. Doubles as the gradient type for updates.
using GradMap = std::unordered_map<ContextKey, std::vector<double>, ContextKeyHash>;

// acc += scale * g
void axpy(GradMap& acc, const GradMap& g, double scale, int vocab_size);

double l2_norm(const GradMap& g);
bool all_finite(const GradMap& g);

// Tabular autoregressive softmax policy. A row of logits per reachable
// context; rows not yet materialized read `default_logit` for every token,
// i.e. the policy starts at the maximum-entropy uniform distribution.
//
// Reads (sampling, log-probs, KL) are const and safe to run concurrently;
// updates require exclusive access. `version()` increments on every
// parameter change so rollouts can be checked for on-policy freshness.
class PolicyTable {
 public:
  using RowMap = std::unordered_map<ContextKey, std::vector<double>, ContextKeyHash>;

  PolicyTable(Vocab vocab, int context_order, double default_logit = 0.0);

  const Vocab& vocab() const { return vocab_; }
  int context_order() const { return order_; }
  double default_logit() const { return default_logit_; }
  std::uint64_t version() const { return version_; }
  const RowMap& rows() const { return rows_; }

  ContextKey initial_context(PromptKey key) const { return ContextKey(key); }

  double logit(const ContextKey& ctx, TokenId tok) const;
  std::vector<double> logits(const ContextKey& ctx) const;

  // Log-softmax of the context's logit row; exp of it sums to 1 within 1e-12.
  std::vector<double> log_probs(const ContextKey& ctx) const;

  void set_logit(const ContextKey& ctx, TokenId tok, double value);

  // theta += scale * grad. Rows whose increment is identically zero are
  // left untouched so no-op updates keep the table bit-identical.
  void add_scaled(const GradMap& grad, double scale);

  bool operator==(const PolicyTable& other) const;

 private:
  std::vector<double>& materialize(const ContextKey& ctx);

  Vocab vocab_;
  int order_ = 0;
  double default_logit_ = 0.0;
  std::uint64_t version_ = 0;
  RowMap rows_;
};

// Samples one sequence autoregressively; stops at EOS or after max_len
// tokens. Never fails: truncation just yields terminated == false.
Rollout sample_rollout(const PolicyTable& policy, PromptKey prompt, Rng& rng, int max_len);

// Sum over positions of log pi(y_t | prompt, y_<t).
double sequence_logprob(const PolicyTable& policy, PromptKey prompt,
                        std::span<const TokenId> tokens);

// Analytic gradient of sequence_logprob w.r.t. the logit table: for each
// visited context with realized token a, +(1 - p(a)) at a and -p(b)
// elsewhere, accumulated over repeated visits.
GradMap grad_logprob(const PolicyTable& policy, PromptKey prompt,
                     std::span<const TokenId> tokens);

// Argmax decode, ties broken toward the smallest token id.
Rollout greedy_decode(const PolicyTable& policy, PromptKey prompt, int max_len);

// Exact categorical KL(policy || reference), summed over the contexts
// visited while generating `tokens` (with multiplicity).
double kl_to_reference(const PolicyTable& policy, const PolicyTable& reference,
                       PromptKey prompt, std::span<const TokenId> tokens);

}  // namespace confclip
