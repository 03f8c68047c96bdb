#include "confclip/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "confclip/rng.hpp"

namespace confclip::oracle {

void EnumerationBudget::check(const Vocab& vocab) const {
  if (max_len < 1)
    throw std::invalid_argument("EnumerationBudget: max_len must be >= 1");
  if (max_paths < 1)
    throw std::invalid_argument("EnumerationBudget: max_paths must be >= 1");
  std::int64_t need = 1;
  for (int i = 0; i < max_len; ++i) {
    if (need > max_paths / vocab.size) {
      const double total = std::pow(static_cast<double>(vocab.size), max_len);
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "enumeration refused: V^max_len = %d^%d ~ %.3g paths "
                    "exceeds budget of %lld",
                    static_cast<int>(vocab.size), max_len, total,
                    static_cast<long long>(max_paths));
      throw std::invalid_argument(msg);
    }
    need *= vocab.size;
  }
}

namespace {

void dfs_paths(const PolicyTable& policy, const ContextKey& ctx, int depth,
               int max_len, std::vector<TokenId>& buf, double logp,
               const std::function<void(const PathInfo&)>& visit) {
  const std::vector<double> lp = policy.log_probs(ctx);
  const TokenId v = policy.vocab().size;
  const TokenId eos = policy.vocab().eos;
  for (TokenId t = 0; t < v; ++t) {
    buf.push_back(t);
    const double path_lp = logp + lp[t];
    const int len = depth + 1;
    const bool terminated = (t == eos);
    if (terminated || len == max_len) {
      visit(PathInfo{buf, path_lp, terminated, std::exp(path_lp),
                     std::exp(path_lp / len)});
    } else {
      ContextKey next = ctx;
      next.push(t, policy.context_order());
      dfs_paths(policy, next, len, max_len, buf, path_lp, visit);
    }
    buf.pop_back();
  }
}

}  // namespace

void enumerate_paths(const PolicyTable& policy, PromptKey prompt, int max_len,
                     const std::function<void(const PathInfo&)>& visit) {
  if (max_len < 1)
    throw std::invalid_argument("enumerate_paths: max_len must be >= 1");
  std::vector<TokenId> buf;
  buf.reserve(max_len);
  dfs_paths(policy, policy.initial_context(prompt), 0, max_len, buf, 0.0, visit);
}

double brute_force_expected_reward(const PolicyTable& policy,
                                   const TaskPrompt& task, const RewardSpec& spec,
                                   const EnumerationBudget& budget) {
  budget.check(policy.vocab());
  spec.validate();
  double total = 0.0;
  enumerate_paths(policy, task.prompt_key(), budget.max_len,
                  [&](const PathInfo& p) {
                    const bool ok = verify_tokens(task, p.tokens, p.terminated,
                                                  policy.vocab());
                    total += p.prob * shape_reward(spec, ok, p.confidence);
                  });
  return total;
}

GradMap exact_policy_gradient(const PolicyTable& policy, const TaskPrompt& task,
                              const RewardSpec& spec,
                              const EnumerationBudget& budget) {
  budget.check(policy.vocab());
  spec.validate();
  GradMap grad;
  const PromptKey prompt = task.prompt_key();
  enumerate_paths(policy, prompt, budget.max_len, [&](const PathInfo& p) {
    const bool ok = verify_tokens(task, p.tokens, p.terminated, policy.vocab());
    const double reward = shape_reward(spec, ok, p.confidence);
    const double slope = shape_slope(spec, ok, p.confidence);
    const double coeff =
        reward + slope * p.confidence / static_cast<double>(p.tokens.size());
    if (coeff == 0.0) return;
    const GradMap glp = grad_logprob(policy, prompt, p.tokens);
    axpy(grad, glp, p.prob * coeff, policy.vocab().size);
  });
  return grad;
}

GradMap exact_score_gradient(const PolicyTable& policy, PromptKey prompt,
                             int max_len,
                             const std::function<double(const PathInfo&)>& reward) {
  GradMap grad;
  enumerate_paths(policy, prompt, max_len, [&](const PathInfo& p) {
    const double r = reward(p);
    if (r == 0.0) return;
    const GradMap glp = grad_logprob(policy, prompt, p.tokens);
    axpy(grad, glp, p.prob * r, policy.vocab().size);
  });
  return grad;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const PolicyTable&)>& f, const PolicyTable& policy,
    const std::vector<Coord>& coords, double h) {
  if (!(h >= 1e-7 && h <= 1e-3))
    throw std::invalid_argument("finite_diff_grad: h must lie in [1e-7, 1e-3]");
  std::vector<double> out;
  out.reserve(coords.size());
  for (const auto& [ctx, tok] : coords) {
    const double base = policy.logit(ctx, tok);
    PolicyTable plus = policy;
    plus.set_logit(ctx, tok, base + h);
    PolicyTable minus = policy;
    minus.set_logit(ctx, tok, base - h);
    out.push_back((f(plus) - f(minus)) / (2.0 * h));
  }
  return out;
}

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kAtol = 1e-9;
constexpr double kRtol = 1e-5;

bool values_agree(double a, double b) {
  const double diff = std::abs(a - b);
  return diff <= kAtol || diff <= kRtol * std::max(std::abs(a), std::abs(b));
}

double rel_err(double a, double b) {
  const double diff = std::abs(a - b);
  return diff / std::max({std::abs(a), std::abs(b), kAtol / kRtol});
}

double grad_entry(const GradMap& g, const Coord& coord) {
  auto it = g.find(coord.first);
  return it == g.end() ? 0.0 : it->second[coord.second];
}

// Contexts reachable while generating: prefixes with no EOS, up to
// max_len - 1 generated tokens.
std::vector<ContextKey> reachable_contexts(const Vocab& vocab, int order,
                                           PromptKey prompt, int max_len) {
  std::vector<ContextKey> out;
  std::set<ContextKey> seen;
  std::vector<std::pair<ContextKey, int>> stack{{ContextKey(prompt), 0}};
  while (!stack.empty()) {
    auto [ctx, depth] = stack.back();
    stack.pop_back();
    if (seen.insert(ctx).second) out.push_back(ctx);
    if (depth + 1 >= max_len) continue;
    for (TokenId t = 0; t < vocab.size; ++t) {
      if (t == vocab.eos) continue;
      ContextKey next = ctx;
      next.push(t, order);
      stack.emplace_back(next, depth + 1);
    }
  }
  return out;
}

void note_failure(GradcheckReport& rep, const char* phase, int trial, int coord,
                  double analytic, double fd) {
  ++rep.failures;
  if (rep.worst.empty()) {
    char msg[200];
    std::snprintf(msg, sizeof msg,
                  "%s: trial %d coord %d analytic=%.12g fd=%.12g", phase, trial,
                  coord, analytic, fd);
    rep.worst = msg;
  }
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, int trials, bool corrupt) {
  GradcheckReport rep;
  if (trials <= 0) return rep;
  Rng rng(mix_seed(seed, 0x6c0dec));

  for (int trial = 0; trial < trials; ++trial) {
    ++rep.trials;

    // Sequence log-prob gradient vs finite differences.
    {
      const TokenId v = static_cast<TokenId>(3 + uniform_index(rng, 6));
      const int order = static_cast<int>(1 + uniform_index(rng, 2));
      PolicyTable policy(Vocab::with_digits(v), order);
      const PromptKey prompt{static_cast<std::int64_t>(uniform_index(rng, 1000))};
      const int len = static_cast<int>(1 + uniform_index(rng, 4));
      std::vector<TokenId> seq;
      for (int i = 0; i < len; ++i)
        seq.push_back(static_cast<TokenId>(uniform_index(rng, v)));

      std::vector<ContextKey> visited;
      ContextKey ctx = policy.initial_context(prompt);
      for (TokenId t : seq) {
        visited.push_back(ctx);
        ctx.push(t, order);
      }
      for (const ContextKey& c : visited)
        for (TokenId t = 0; t < v; ++t)
          policy.set_logit(c, t, -2.0 + 4.0 * uniform01(rng));

      std::vector<Coord> coords;
      for (const ContextKey& c : visited)
        for (TokenId t = 0; t < v; ++t) coords.emplace_back(c, t);

      const GradMap analytic = grad_logprob(policy, prompt, seq);
      const std::vector<double> fd = finite_diff_grad(
          [&](const PolicyTable& p) { return sequence_logprob(p, prompt, seq); },
          policy, coords, kFdStep);
      for (std::size_t i = 0; i < coords.size(); ++i) {
        double a = grad_entry(analytic, coords[i]);
        if (corrupt && trial == 0 && i == 0) a += 1e-3;
        ++rep.coords_checked;
        rep.max_rel_err = std::max(rep.max_rel_err, rel_err(a, fd[i]));
        if (!values_agree(a, fd[i]))
          note_failure(rep, "sequence-logprob-grad", trial, static_cast<int>(i),
                       a, fd[i]);
      }
    }

    // Expected-reward gradient vs finite differences of the enumerated
    // expectation, on an instance small enough to enumerate.
    {
      const TokenId v = static_cast<TokenId>(4 + uniform_index(rng, 3));
      const int modulus = static_cast<int>(2 + uniform_index(rng, v - 2));
      const int order = static_cast<int>(1 + uniform_index(rng, 2));
      const int max_len = static_cast<int>(2 + uniform_index(rng, 2));

      TaskPrompt task;
      task.prompt_id = trial;
      task.modulus = modulus;
      task.a = static_cast<int>(uniform_index(rng, modulus));
      task.b = static_cast<int>(uniform_index(rng, modulus));
      const bool easy = uniform_index(rng, 2) == 0;
      task.op = easy ? Op::add : Op::mul;
      task.tier = easy ? Tier::easy : Tier::hard;

      PolicyTable policy(Vocab::with_digits(v), order);
      const PromptKey prompt = task.prompt_key();
      const std::vector<ContextKey> contexts =
          reachable_contexts(policy.vocab(), order, prompt, max_len);
      for (const ContextKey& c : contexts)
        for (TokenId t = 0; t < v; ++t)
          policy.set_logit(c, t, -2.0 + 4.0 * uniform01(rng));

      RewardSpec spec;
      spec.variant = static_cast<RewardVariant>(uniform_index(rng, 5));
      const EnumerationBudget budget{max_len, 1000000};

      // The clip corner is not differentiable; re-draw epsilon until no
      // enumerated path's confidence sits near a corner.
      bool usable = true;
      if (spec.variant == RewardVariant::ConfClip) {
        std::vector<double> confs;
        enumerate_paths(policy, prompt, max_len,
                        [&](const PathInfo& p) { confs.push_back(p.confidence); });
        usable = false;
        for (int attempt = 0; attempt < 16 && !usable; ++attempt) {
          spec.epsilon = 0.05 + 0.9 * uniform01(rng);
          usable = true;
          for (double s : confs)
            if (std::abs(s - (1.0 - spec.epsilon)) <= 10.0 * kFdStep ||
                std::abs(s - 1.0) <= 10.0 * kFdStep) {
              usable = false;
              break;
            }
        }
      }
      if (usable) {
        std::vector<Coord> coords;
        for (int i = 0; i < 12; ++i)
          coords.emplace_back(contexts[uniform_index(rng, contexts.size())],
                              static_cast<TokenId>(uniform_index(rng, v)));

        const GradMap analytic = exact_policy_gradient(policy, task, spec, budget);
        const std::vector<double> fd = finite_diff_grad(
            [&](const PolicyTable& p) {
              return brute_force_expected_reward(p, task, spec, budget);
            },
            policy, coords, kFdStep);
        for (std::size_t i = 0; i < coords.size(); ++i) {
          const double a = grad_entry(analytic, coords[i]);
          ++rep.coords_checked;
          rep.max_rel_err = std::max(rep.max_rel_err, rel_err(a, fd[i]));
          if (!values_agree(a, fd[i]))
            note_failure(rep, "expected-reward-grad", trial,
                         static_cast<int>(i), a, fd[i]);
        }
      }
    }
  }
  return rep;
}

}  // namespace confclip::oracle
