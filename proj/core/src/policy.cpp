#include "confclip/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace confclip {

void axpy(GradMap& acc, const GradMap& g, double scale, int vocab_size) {
  for (const auto& [ctx, row] : g) {
    auto it = acc.find(ctx);
    if (it == acc.end())
      it = acc.emplace(ctx, std::vector<double>(vocab_size, 0.0)).first;
    auto& dst = it->second;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * row[i];
  }
}

double l2_norm(const GradMap& g) {
  double s = 0.0;
  for (const auto& [ctx, row] : g)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

bool all_finite(const GradMap& g) {
  for (const auto& [ctx, row] : g)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  return true;
}

PolicyTable::PolicyTable(Vocab vocab, int context_order, double default_logit)
    : vocab_(vocab), order_(context_order), default_logit_(default_logit) {
  if (order_ < 0 || order_ > kMaxContextOrder)
    throw std::invalid_argument("PolicyTable: context_order must be in [0, " +
                                std::to_string(kMaxContextOrder) + "]");
  if (!std::isfinite(default_logit_))
    throw std::invalid_argument("PolicyTable: default_logit must be finite");
}

double PolicyTable::logit(const ContextKey& ctx, TokenId tok) const {
  if (!vocab_.contains(tok))
    throw std::invalid_argument("PolicyTable: token id out of vocabulary");
  auto it = rows_.find(ctx);
  return it == rows_.end() ? default_logit_ : it->second[tok];
}

std::vector<double> PolicyTable::logits(const ContextKey& ctx) const {
  auto it = rows_.find(ctx);
  if (it != rows_.end()) return it->second;
  return std::vector<double>(vocab_.size, default_logit_);
}

std::vector<double> PolicyTable::log_probs(const ContextKey& ctx) const {
  std::vector<double> lp = logits(ctx);
  const double m = *std::max_element(lp.begin(), lp.end());
  double sum = 0.0;
  for (double v : lp) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  for (double& v : lp) v -= lse;
  return lp;
}

std::vector<double>& PolicyTable::materialize(const ContextKey& ctx) {
  auto it = rows_.find(ctx);
  if (it == rows_.end())
    it = rows_.emplace(ctx, std::vector<double>(vocab_.size, default_logit_)).first;
  return it->second;
}

void PolicyTable::set_logit(const ContextKey& ctx, TokenId tok, double value) {
  if (!vocab_.contains(tok))
    throw std::invalid_argument("PolicyTable: token id out of vocabulary");
  materialize(ctx)[tok] = value;
  ++version_;
}

void PolicyTable::add_scaled(const GradMap& grad, double scale) {
  for (const auto& [ctx, row] : grad) {
    if (static_cast<TokenId>(row.size()) != vocab_.size)
      throw std::invalid_argument("PolicyTable: gradient row width mismatch");
    bool nonzero = false;
    for (double v : row)
      if (v != 0.0) { nonzero = true; break; }
    if (!nonzero || scale == 0.0) continue;
    auto& dst = materialize(ctx);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * row[i];
  }
  ++version_;
}

bool PolicyTable::operator==(const PolicyTable& other) const {
  if (!(vocab_ == other.vocab_) || order_ != other.order_ ||
      default_logit_ != other.default_logit_)
    return false;
  // Compare effective parameters: a missing row equals a default-filled one.
  auto covered_by = [](const PolicyTable& a, const PolicyTable& b) {
    for (const auto& [ctx, row] : a.rows_) {
      for (TokenId t = 0; t < a.vocab_.size; ++t)
        if (row[t] != b.logit(ctx, t)) return false;
    }
    return true;
  };
  return covered_by(*this, other) && covered_by(other, *this);
}

namespace {

// Walks the visited contexts of a fixed token sequence.
template <typename Fn>
void visit_contexts(const PolicyTable& policy, PromptKey prompt,
                    std::span<const TokenId> tokens, Fn&& fn) {
  ContextKey ctx = policy.initial_context(prompt);
  for (TokenId tok : tokens) {
    if (!policy.vocab().contains(tok))
      throw std::invalid_argument("policy: unknown token id in sequence");
    fn(ctx, tok);
    ctx.push(tok, policy.context_order());
  }
}

TokenId pick_from_cdf(const std::vector<double>& log_probs, double u) {
  double acc = 0.0;
  const TokenId n = static_cast<TokenId>(log_probs.size());
  for (TokenId t = 0; t < n; ++t) {
    acc += std::exp(log_probs[t]);
    if (u < acc) return t;
  }
  return n - 1;  // u landed in the rounding tail
}

}  // namespace

Rollout sample_rollout(const PolicyTable& policy, PromptKey prompt, Rng& rng,
                       int max_len) {
  if (max_len < 1) throw std::invalid_argument("sample_rollout: max_len must be >= 1");
  Rollout out;
  out.tokens.reserve(max_len);
  out.token_logprobs.reserve(max_len);
  ContextKey ctx = policy.initial_context(prompt);
  for (int t = 0; t < max_len; ++t) {
    const std::vector<double> lp = policy.log_probs(ctx);
    const TokenId tok = pick_from_cdf(lp, uniform01(rng));
    out.tokens.push_back(tok);
    out.token_logprobs.push_back(lp[tok]);
    if (tok == policy.vocab().eos) {
      out.terminated = true;
      break;
    }
    ctx.push(tok, policy.context_order());
  }
  out.policy_version = policy.version();
  return out;
}

double sequence_logprob(const PolicyTable& policy, PromptKey prompt,
                        std::span<const TokenId> tokens) {
  if (tokens.empty())
    throw std::invalid_argument("sequence_logprob: empty token sequence");
  double total = 0.0;
  visit_contexts(policy, prompt, tokens, [&](const ContextKey& ctx, TokenId tok) {
    total += policy.log_probs(ctx)[tok];
  });
  return total;
}

GradMap grad_logprob(const PolicyTable& policy, PromptKey prompt,
                     std::span<const TokenId> tokens) {
  if (tokens.empty())
    throw std::invalid_argument("grad_logprob: empty token sequence");
  GradMap grad;
  const TokenId v = policy.vocab().size;
  visit_contexts(policy, prompt, tokens, [&](const ContextKey& ctx, TokenId tok) {
    auto it = grad.find(ctx);
    if (it == grad.end()) it = grad.emplace(ctx, std::vector<double>(v, 0.0)).first;
    const std::vector<double> lp = policy.log_probs(ctx);
    auto& row = it->second;
    for (TokenId b = 0; b < v; ++b) row[b] -= std::exp(lp[b]);
    row[tok] += 1.0;
  });
  return grad;
}

Rollout greedy_decode(const PolicyTable& policy, PromptKey prompt, int max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  Rollout out;
  ContextKey ctx = policy.initial_context(prompt);
  for (int t = 0; t < max_len; ++t) {
    const std::vector<double> row = policy.logits(ctx);
    TokenId best = 0;
    for (TokenId b = 1; b < static_cast<TokenId>(row.size()); ++b)
      if (row[b] > row[best]) best = b;
    out.tokens.push_back(best);
    out.token_logprobs.push_back(policy.log_probs(ctx)[best]);
    if (best == policy.vocab().eos) {
      out.terminated = true;
      break;
    }
    ctx.push(best, policy.context_order());
  }
  out.policy_version = policy.version();
  return out;
}

double kl_to_reference(const PolicyTable& policy, const PolicyTable& reference,
                       PromptKey prompt, std::span<const TokenId> tokens) {
  if (!(policy.vocab() == reference.vocab()) ||
      policy.context_order() != reference.context_order())
    throw std::invalid_argument("kl_to_reference: incompatible policies");
  double total = 0.0;
  visit_contexts(policy, prompt, tokens, [&](const ContextKey& ctx, TokenId) {
    const std::vector<double> lp = policy.log_probs(ctx);
    const std::vector<double> lq = reference.log_probs(ctx);
    for (std::size_t a = 0; a < lp.size(); ++a)
      total += std::exp(lp[a]) * (lp[a] - lq[a]);
  });
  return total;
}

}  // namespace confclip
