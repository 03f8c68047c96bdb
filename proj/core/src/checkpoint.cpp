#include "confclip/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace confclip {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string encode_prefix(const ContextKey& ctx) {
  if (ctx.size == 0) return "-";
  std::string s;
  for (int i = 0; i < ctx.size; ++i) {
    if (i) s += ',';
    s += std::to_string(ctx.prefix[i]);
  }
  return s;
}

void decode_prefix(const std::string& s, ContextKey& ctx, int max_order) {
  ctx.size = 0;
  ctx.prefix = {};
  if (s == "-") return;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (ctx.size >= max_order)
      throw std::runtime_error("prefix longer than context order");
    ctx.prefix[ctx.size++] = static_cast<TokenId>(std::stoi(item));
  }
  if (ctx.size == 0) throw std::runtime_error("empty prefix field");
}

}  // namespace

void save_policy(const PolicyTable& policy, const std::string& path) {
  std::vector<const ContextKey*> keys;
  keys.reserve(policy.rows().size());
  for (const auto& [ctx, row] : policy.rows()) keys.push_back(&ctx);
  std::sort(keys.begin(), keys.end(),
            [](const ContextKey* a, const ContextKey* b) { return *a < *b; });

  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_policy: cannot open '" + path + "' for writing");
  const Vocab& vocab = policy.vocab();
  out << "confclip-policy v=1 vocab=" << vocab.size << " eos=" << vocab.eos
      << " order=" << policy.context_order()
      << " default_logit=" << fmt17(policy.default_logit())
      << " entries=" << keys.size() * static_cast<std::size_t>(vocab.size) << "\n";
  for (const ContextKey* ctx : keys) {
    const std::string prefix = encode_prefix(*ctx);
    for (TokenId t = 0; t < vocab.size; ++t) {
      out << ctx->prompt_id << ' ' << prefix << ' ' << t << ' '
          << fmt17(policy.logit(*ctx, t)) << "\n";
    }
  }
  if (!out)
    throw std::runtime_error("save_policy: write failed for '" + path + "'");
}

PolicyTable load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_policy: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("load_policy: empty file '" + path + "'");

  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "confclip-policy")
    throw std::runtime_error("load_policy: unrecognized header in '" + path + "'");
  long long vocab_size = -1, eos = -1, order = -1, entries = -1;
  double default_logit = 0.0;
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("load_policy: bad header field '" + kv + "' in '" +
                               path + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "v") {
      if (value != "1")
        throw std::runtime_error("load_policy: unsupported version " + value);
    } else if (key == "vocab") {
      vocab_size = std::stoll(value);
    } else if (key == "eos") {
      eos = std::stoll(value);
    } else if (key == "order") {
      order = std::stoll(value);
    } else if (key == "default_logit") {
      default_logit = std::stod(value);
    } else if (key == "entries") {
      entries = std::stoll(value);
    } else {
      throw std::runtime_error("load_policy: unknown header key '" + key +
                               "' in '" + path + "'");
    }
  }
  if (vocab_size < 0 || eos < 0 || order < 0 || entries < 0)
    throw std::runtime_error("load_policy: incomplete header in '" + path + "'");

  PolicyTable policy(Vocab(static_cast<TokenId>(vocab_size),
                           static_cast<TokenId>(eos)),
                     static_cast<int>(order), default_logit);

  std::string line;
  long long seen = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::int64_t prompt_id;
    std::string prefix;
    long long token;
    double logit;
    if (!(ls >> prompt_id >> prefix >> token >> logit))
      throw std::runtime_error("load_policy: malformed entry at " + path + ":" +
                               std::to_string(line_no));
    ContextKey ctx;
    ctx.prompt_id = prompt_id;
    try {
      decode_prefix(prefix, ctx, static_cast<int>(order));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_policy: " + std::string(e.what()) + " at " +
                               path + ":" + std::to_string(line_no));
    }
    policy.set_logit(ctx, static_cast<TokenId>(token), logit);
    ++seen;
  }
  if (seen != entries)
    throw std::runtime_error("load_policy: header promises " +
                             std::to_string(entries) + " entries but file has " +
                             std::to_string(seen) + " ('" + path + "', last line " +
                             std::to_string(line_no) + ")");
  return policy;
}

}  // namespace confclip
