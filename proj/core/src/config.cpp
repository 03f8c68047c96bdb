#include "confclip/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace confclip {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& dotted) {
  throw std::invalid_argument("unknown config key '" + dotted + "'");
}

template <typename T>
T get_as(const json& section, const std::string& section_name,
         const std::string& key) {
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config key '" + section_name + "." + key +
                                "' has the wrong type: " + e.what());
  }
}

void read_section(const json& doc, const std::string& name,
                  const std::vector<std::string>& known,
                  const std::function<void(const std::string&)>& read_key) {
  if (!doc.contains(name)) return;
  const json& section = doc.at(name);
  if (!section.is_object())
    throw std::invalid_argument("config section '" + name +
                                "' must be an object");
  for (const auto& [key, value] : section.items()) {
    bool ok = false;
    for (const std::string& k : known)
      if (k == key) { ok = true; break; }
    if (!ok) bad_key(name + "." + key);
    read_key(key);
  }
}

ConfigFile from_json(const json& doc) {
  if (!doc.is_object())
    throw std::invalid_argument("config root must be an object");
  static const std::vector<std::string> sections = {"policy", "task", "reward",
                                                    "optim", "run"};
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const std::string& s : sections)
      if (s == key) { ok = true; break; }
    if (!ok) throw std::invalid_argument("unknown config section '" + key + "'");
  }

  ConfigFile cfg;
  read_section(doc, "policy", {"V", "context_order", "default_logit"},
               [&](const std::string& key) {
                 const json& s = doc.at("policy");
                 if (key == "V") cfg.vocab_size = get_as<int>(s, "policy", key);
                 else if (key == "context_order")
                   cfg.context_order = get_as<int>(s, "policy", key);
                 else
                   cfg.default_logit = get_as<double>(s, "policy", key);
               });
  read_section(doc, "task", {"regime", "n", "modulus", "seed"},
               [&](const std::string& key) {
                 const json& s = doc.at("task");
                 if (key == "regime")
                   cfg.regime =
                       regime_from_string(get_as<std::string>(s, "task", key));
                 else if (key == "n") cfg.task_n = get_as<int>(s, "task", key);
                 else if (key == "modulus")
                   cfg.modulus = get_as<int>(s, "task", key);
                 else
                   cfg.task_seed = get_as<std::int64_t>(s, "task", key);
               });
  read_section(doc, "reward", {"variant", "epsilon"},
               [&](const std::string& key) {
                 const json& s = doc.at("reward");
                 if (key == "variant")
                   cfg.reward.variant = reward_variant_from_string(
                       get_as<std::string>(s, "reward", key));
                 else
                   cfg.reward.epsilon = get_as<double>(s, "reward", key);
               });
  read_section(doc, "optim",
               {"G", "batch_tasks", "learning_rate", "kl_coeff", "std_guard"},
               [&](const std::string& key) {
                 const json& s = doc.at("optim");
                 if (key == "G") cfg.group_size = get_as<int>(s, "optim", key);
                 else if (key == "batch_tasks")
                   cfg.batch_tasks = get_as<int>(s, "optim", key);
                 else if (key == "learning_rate")
                   cfg.learning_rate = get_as<double>(s, "optim", key);
                 else if (key == "kl_coeff")
                   cfg.kl_coeff = get_as<double>(s, "optim", key);
                 else
                   cfg.std_guard = get_as<double>(s, "optim", key);
               });
  read_section(doc, "run",
               {"steps", "max_len", "seed", "metrics_path", "format",
                "eval_every"},
               [&](const std::string& key) {
                 const json& s = doc.at("run");
                 if (key == "steps") cfg.steps = get_as<int>(s, "run", key);
                 else if (key == "max_len")
                   cfg.max_len = get_as<int>(s, "run", key);
                 else if (key == "seed")
                   cfg.run_seed = get_as<std::int64_t>(s, "run", key);
                 else if (key == "metrics_path")
                   cfg.metrics_path = get_as<std::string>(s, "run", key);
                 else if (key == "format")
                   cfg.format = metrics_format_from_string(
                       get_as<std::string>(s, "run", key));
                 else
                   cfg.eval_every = get_as<int>(s, "run", key);
               });
  return cfg;
}

json to_json(const ConfigFile& cfg) {
  json doc;
  doc["policy"] = {{"V", cfg.vocab_size},
                   {"context_order", cfg.context_order},
                   {"default_logit", cfg.default_logit}};
  doc["task"] = {{"regime", to_string(cfg.regime)},
                 {"n", cfg.task_n},
                 {"modulus", cfg.modulus},
                 {"seed", cfg.task_seed}};
  doc["reward"] = {{"variant", to_string(cfg.reward.variant)},
                   {"epsilon", cfg.reward.epsilon}};
  doc["optim"] = {{"G", cfg.group_size},
                  {"batch_tasks", cfg.batch_tasks},
                  {"learning_rate", cfg.learning_rate},
                  {"kl_coeff", cfg.kl_coeff},
                  {"std_guard", cfg.std_guard}};
  doc["run"] = {{"steps", cfg.steps},
                {"max_len", cfg.max_len},
                {"seed", cfg.run_seed},
                {"metrics_path", cfg.metrics_path},
                {"format", to_string(cfg.format)},
                {"eval_every", cfg.eval_every}};
  return doc;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + origin + ": " +
                                e.what());
  }
}

void apply_override(json& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + item +
                                "' must look like section.key=value");
  const std::string dotted = item.substr(0, eq);
  const std::string value = item.substr(eq + 1);
  const auto dot = dotted.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size() ||
      dotted.find('.', dot + 1) != std::string::npos)
    throw std::invalid_argument("override key '" + dotted +
                                "' must be section.key");
  const std::string section = dotted.substr(0, dot);
  const std::string key = dotted.substr(dot + 1);

  json parsed;
  try {
    parsed = json::parse(value);
    if (!parsed.is_number() && !parsed.is_boolean() && !parsed.is_string())
      parsed = value;
  } catch (const json::exception&) {
    parsed = value;  // bare words (variant names, paths) are strings
  }
  doc[section][key] = parsed;
}

}  // namespace

void ConfigFile::validate() const {
  if (vocab_size < 2)
    throw std::invalid_argument("policy.V must be >= 2");
  if (context_order < 0 || context_order > kMaxContextOrder)
    throw std::invalid_argument("policy.context_order must lie in [0, " +
                                std::to_string(kMaxContextOrder) + "]");
  if (!std::isfinite(default_logit))
    throw std::invalid_argument("policy.default_logit must be finite");
  if (task_n < 1) throw std::invalid_argument("task.n must be >= 1");
  if (regime == Regime::mixed && task_n < 2)
    throw std::invalid_argument("task.n must be >= 2 for the mixed regime");
  if (modulus < 2 || modulus > 10)
    throw std::invalid_argument("task.modulus must lie in [2, 10]");
  if (vocab_size < modulus + 1)
    throw std::invalid_argument(
        "policy.V must be >= task.modulus + 1 (answer digits plus EOS)");
  if (eval_every < 1) throw std::invalid_argument("run.eval_every must be >= 1");
  // Answers need room for their digits plus the EOS token.
  const int needed = (regime == Regime::easy) ? 2 : 3;
  if (max_len < needed)
    throw std::invalid_argument("run.max_len must be >= " +
                                std::to_string(needed) +
                                " so answers fit in the length budget");
  train_config().validate();
}

TrainConfig ConfigFile::train_config() const {
  TrainConfig tc;
  tc.group_size = group_size;
  tc.batch_tasks = batch_tasks;
  tc.learning_rate = learning_rate;
  tc.kl_coeff = kl_coeff;
  tc.reward_spec = reward;
  tc.max_len = max_len;
  tc.steps = steps;
  tc.seed = run_seed;
  tc.std_guard = std_guard;
  return tc;
}

ConfigFile parse_config(const std::string& json_text) {
  return from_json(parse_json_text(json_text, "config text"));
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(parse_json_text(buf.str(), "'" + path + "'"));
}

std::string serialize_config(const ConfigFile& config) {
  return to_json(config).dump(2) + "\n";
}

ConfigFile resolve_config(const std::optional<std::string>& path,
                          const std::vector<std::string>& overrides) {
  json doc;
  if (path) {
    std::ifstream in(*path);
    if (!in)
      throw std::invalid_argument("cannot open config file '" + *path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    doc = parse_json_text(buf.str(), "'" + *path + "'");
  } else {
    doc = to_json(ConfigFile{});
  }
  for (const std::string& item : overrides) apply_override(doc, item);
  ConfigFile cfg = from_json(doc);
  cfg.validate();
  return cfg;
}

}  // namespace confclip
