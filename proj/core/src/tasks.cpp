#include "confclip/tasks.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "confclip/rng.hpp"

namespace confclip {

std::string to_string(Op op) { return op == Op::add ? "add" : "mul"; }
std::string to_string(Tier tier) { return tier == Tier::easy ? "easy" : "hard"; }
std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::easy: return "easy";
    case Regime::hard: return "hard";
    case Regime::mixed: return "mixed";
  }
  throw std::invalid_argument("to_string: bad regime");
}

Regime regime_from_string(const std::string& s) {
  if (s == "easy") return Regime::easy;
  if (s == "hard") return Regime::hard;
  if (s == "mixed") return Regime::mixed;
  throw std::invalid_argument("regime must be easy, hard, or mixed, got '" + s + "'");
}

namespace {

Op op_from_string(const std::string& s) {
  if (s == "add") return Op::add;
  if (s == "mul") return Op::mul;
  throw std::invalid_argument("op must be add or mul, got '" + s + "'");
}

Tier tier_from_string(const std::string& s) {
  if (s == "easy") return Tier::easy;
  if (s == "hard") return Tier::hard;
  throw std::invalid_argument("tier must be easy or hard, got '" + s + "'");
}

void check_task(const TaskPrompt& t) {
  if (t.modulus < 1 || t.modulus > 10)
    throw std::invalid_argument("task modulus must be in [1, 10]");
  if (t.a < 0 || t.a >= t.modulus || t.b < 0 || t.b >= t.modulus)
    throw std::invalid_argument("task operands must lie in [0, modulus)");
}

}  // namespace

PromptKey TaskPrompt::prompt_key() const {
  check_task(*this);
  const std::int64_t op_bit = (op == Op::mul) ? 1 : 0;
  return PromptKey{(op_bit << 12) | (static_cast<std::int64_t>(a) << 8) |
                   (static_cast<std::int64_t>(b) << 4) | modulus};
}

std::vector<TokenId> TaskPrompt::answer_window() const {
  check_task(*this);
  const TokenId answer = static_cast<TokenId>(
      op == Op::add ? (a + b) % modulus : (a * b) % modulus);
  if (tier == Tier::easy) return {answer};
  // Hard tasks must show the operand sum as scratch work before the product.
  const TokenId scratch = static_cast<TokenId>((a + b) % modulus);
  return {scratch, answer};
}

TaskSuite gen_task_suite(Regime regime, int n, std::int64_t seed, int modulus,
                         std::int64_t id_base) {
  if (n < 1) throw std::invalid_argument("gen_task_suite: n must be >= 1");
  if (modulus < 2 || modulus > 10)
    throw std::invalid_argument("gen_task_suite: modulus must be in [2, 10]");
  if (regime == Regime::mixed && n < 2)
    throw std::invalid_argument("gen_task_suite: mixed regime needs n >= 2");

  Rng rng(mix_seed(static_cast<std::uint64_t>(seed), 0x7a5c5, n, modulus));
  TaskSuite suite;
  suite.regime = regime;
  suite.seed = seed;
  suite.tasks.reserve(n);
  for (int i = 0; i < n; ++i) {
    Tier tier;
    switch (regime) {
      case Regime::easy: tier = Tier::easy; break;
      case Regime::hard: tier = Tier::hard; break;
      case Regime::mixed:
        // Pin the first two so both tiers are always present.
        if (i == 0) tier = Tier::easy;
        else if (i == 1) tier = Tier::hard;
        else tier = (uniform_index(rng, 2) == 0) ? Tier::easy : Tier::hard;
        break;
    }
    TaskPrompt t;
    t.prompt_id = id_base + i;
    t.a = static_cast<int>(uniform_index(rng, modulus));
    t.b = static_cast<int>(uniform_index(rng, modulus));
    t.op = (tier == Tier::easy) ? Op::add : Op::mul;
    t.modulus = modulus;
    t.tier = tier;
    suite.tasks.push_back(t);
  }
  return suite;
}

bool verify_tokens(const TaskPrompt& task, std::span<const TokenId> tokens,
                   bool terminated, const Vocab& vocab) {
  check_task(task);
  if (!terminated) return false;
  if (tokens.empty() || tokens.back() != vocab.eos) return false;
  const std::vector<TokenId> window = task.answer_window();
  const std::size_t w = window.size();
  if (tokens.size() < w + 1) return false;
  for (std::size_t i = 0; i < w; ++i)
    if (tokens[tokens.size() - 1 - w + i] != window[i]) return false;
  return true;
}

bool verify(const TaskPrompt& task, const Rollout& rollout, const Vocab& vocab) {
  return verify_tokens(task, rollout.tokens, rollout.terminated, vocab);
}

void save_suite(const TaskSuite& suite, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_suite: cannot open '" + path + "'");
  out << "confclip-tasks v=1 regime=" << to_string(suite.regime)
      << " seed=" << suite.seed << " n=" << suite.tasks.size() << "\n";
  for (const auto& t : suite.tasks) {
    out << t.prompt_id << ' ' << t.a << ' ' << t.b << ' ' << to_string(t.op)
        << ' ' << t.modulus << ' ' << to_string(t.tier) << "\n";
  }
  if (!out) throw std::runtime_error("save_suite: write failed for '" + path + "'");
}

TaskSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_suite: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("load_suite: empty file '" + path + "'");

  std::istringstream hs(header);
  std::string magic, version_kv, regime_kv, seed_kv, n_kv;
  hs >> magic >> version_kv >> regime_kv >> seed_kv >> n_kv;
  const auto kv_value = [&](const std::string& kv, const std::string& key) {
    const std::string prefix = key + "=";
    if (kv.rfind(prefix, 0) != 0)
      throw std::runtime_error("load_suite: bad header field '" + kv + "' in '" +
                               path + "'");
    return kv.substr(prefix.size());
  };
  if (magic != "confclip-tasks" || kv_value(version_kv, "v") != "1")
    throw std::runtime_error("load_suite: unrecognized header in '" + path + "'");

  TaskSuite suite;
  suite.regime = regime_from_string(kv_value(regime_kv, "regime"));
  suite.seed = std::stoll(kv_value(seed_kv, "seed"));
  const std::size_t n = std::stoull(kv_value(n_kv, "n"));

  std::set<std::int64_t> seen_ids;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TaskPrompt t;
    std::string op_s, tier_s;
    if (!(ls >> t.prompt_id >> t.a >> t.b >> op_s >> t.modulus >> tier_s))
      throw std::runtime_error("load_suite: malformed task at " + path + ":" +
                               std::to_string(line_no));
    t.op = op_from_string(op_s);
    t.tier = tier_from_string(tier_s);
    check_task(t);
    if (!seen_ids.insert(t.prompt_id).second)
      throw std::runtime_error("load_suite: duplicate prompt_id at " + path + ":" +
                               std::to_string(line_no));
    suite.tasks.push_back(t);
  }
  if (suite.tasks.size() != n)
    throw std::runtime_error("load_suite: header says n=" + std::to_string(n) +
                             " but found " + std::to_string(suite.tasks.size()) +
                             " tasks in '" + path + "'");
  return suite;
}

}  // namespace confclip
