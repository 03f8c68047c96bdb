#pragma once

#include <string>

#include "confclip/policy.hpp"

namespace confclip {

// Line-delimited text dump of the logit table, sorted by context then token
// so two checkpoints diff cleanly. The header carries the table shape and
// an entry count, which makes truncated files detectable on load.
void save_policy(const PolicyTable& policy, const std::string& path);
PolicyTable load_policy(const std::string& path);

}  // namespace confclip
