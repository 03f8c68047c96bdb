#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confclip/metrics.hpp"
#include "confclip/optim.hpp"
#include "confclip/rewards.hpp"
#include "confclip/tasks.hpp"
#include "confclip/vocab.hpp"

namespace confclip {

// Experiment configuration, grouped the way the JSON config file is:
// policy / task / reward / optim / run sections. Every field has a default,
// so a config file only needs the keys it wants to change. Unknown sections
// or keys are a hard error.
struct ConfigFile {
  // policy
  int vocab_size = 11;
  int context_order = 2;
  double default_logit = 0.0;

  // task
  Regime regime = Regime::easy;
  int task_n = 16;
  int modulus = 10;
  std::int64_t task_seed = 1;

  // reward
  RewardSpec reward{RewardVariant::ConfClip, 0.2};

  // optim
  int group_size = 7;
  int batch_tasks = 16;
  double learning_rate = 5.0;
  double kl_coeff = 0.005;
  double std_guard = 1e-8;

  // run
  int steps = 300;
  int max_len = 6;
  std::int64_t run_seed = 42;
  std::string metrics_path = "metrics.csv";
  MetricsFormat format = MetricsFormat::csv;
  int eval_every = 10;

  void validate() const;
  Vocab vocab() const { return Vocab::with_digits(vocab_size); }
  TrainConfig train_config() const;
};

// Parses the JSON text; missing keys keep defaults, unknown keys throw with
// the offending key's dotted name.
ConfigFile parse_config(const std::string& json_text);
ConfigFile load_config(const std::string& path);

std::string serialize_config(const ConfigFile& config);

// Loads `path` if given (else starts from defaults), applies repeated
// "section.key=value" overrides in order, then validates.
ConfigFile resolve_config(const std::optional<std::string>& path,
                          const std::vector<std::string>& overrides);

}  // namespace confclip
