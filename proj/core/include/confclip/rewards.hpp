#pragma once

#include <string>

#include "confclip/policy.hpp"

namespace confclip {

enum class RewardVariant { Binary01, BinarySign, ConfWeighted, ConfSign, ConfClip };

std::string to_string(RewardVariant v);
RewardVariant reward_variant_from_string(const std::string& s);

// Which shaping rule to apply. epsilon is only read by ConfClip; epsilon = 1
// makes ConfClip coincide with ConfSign, epsilon near 0 with BinarySign.
struct RewardSpec {
  RewardVariant variant = RewardVariant::ConfClip;
  double epsilon = 0.2;

  void validate() const;
};

struct ShapedReward {
  double value = 0.0;
  bool correct = false;
  double confidence = 0.0;
};

// Length-normalized sequence confidence: the geometric mean of the sampled
// per-token probabilities, computed in log space and exponentiated once.
// Uses the log-probs recorded at sampling time, so it is on-policy by
// construction.
double confidence(const Rollout& rollout);

// Binary01:     1 / 0
// BinarySign:  +1 / -1
// ConfWeighted: s / 0
// ConfSign:    +s / -s
// ConfClip:     clip(s, 1-eps, 1) / clip(-s, -1, eps-1)
// clip uses closed bounds; s must lie in (0, 1].
double shape_reward(const RewardSpec& spec, bool correct, double s);

ShapedReward shaped(const RewardSpec& spec, bool correct, double s);

// Derivative of shape_reward with respect to s where it exists (the clip
// corners are measure zero). The enumeration oracle needs this to
// differentiate through the confidence term.
double shape_slope(const RewardSpec& spec, bool correct, double s);

}  // namespace confclip
