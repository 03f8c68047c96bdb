#include "confclip/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace confclip {

std::string to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::Binary01: return "Binary01";
    case RewardVariant::BinarySign: return "BinarySign";
    case RewardVariant::ConfWeighted: return "ConfWeighted";
    case RewardVariant::ConfSign: return "ConfSign";
    case RewardVariant::ConfClip: return "ConfClip";
  }
  throw std::invalid_argument("to_string: bad reward variant");
}

RewardVariant reward_variant_from_string(const std::string& s) {
  if (s == "Binary01") return RewardVariant::Binary01;
  if (s == "BinarySign") return RewardVariant::BinarySign;
  if (s == "ConfWeighted") return RewardVariant::ConfWeighted;
  if (s == "ConfSign") return RewardVariant::ConfSign;
  if (s == "ConfClip") return RewardVariant::ConfClip;
  throw std::invalid_argument("unknown reward variant '" + s + "'");
}

void RewardSpec::validate() const {
  if (variant == RewardVariant::ConfClip &&
      !(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("ConfClip epsilon must lie in (0, 1]");
}

double confidence(const Rollout& rollout) {
  if (rollout.tokens.empty())
    throw std::invalid_argument("confidence: rollout must have length >= 1");
  double total = 0.0;
  for (double lp : rollout.token_logprobs) total += lp;
  return std::exp(total / static_cast<double>(rollout.tokens.size()));
}

namespace {
double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }
}  // namespace

double shape_reward(const RewardSpec& spec, bool correct, double s) {
  spec.validate();
  if (!(s > 0.0 && s <= 1.0))
    throw std::invalid_argument("shape_reward: confidence must lie in (0, 1]");
  switch (spec.variant) {
    case RewardVariant::Binary01:
      return correct ? 1.0 : 0.0;
    case RewardVariant::BinarySign:
      return correct ? 1.0 : -1.0;
    case RewardVariant::ConfWeighted:
      return correct ? s : 0.0;
    case RewardVariant::ConfSign:
      return correct ? s : -s;
    case RewardVariant::ConfClip:
      return correct ? clip(s, 1.0 - spec.epsilon, 1.0)
                     : clip(-s, -1.0, spec.epsilon - 1.0);
  }
  throw std::invalid_argument("shape_reward: bad reward variant");
}

ShapedReward shaped(const RewardSpec& spec, bool correct, double s) {
  return ShapedReward{shape_reward(spec, correct, s), correct, s};
}

double shape_slope(const RewardSpec& spec, bool correct, double s) {
  spec.validate();
  if (!(s > 0.0 && s <= 1.0))
    throw std::invalid_argument("shape_slope: confidence must lie in (0, 1]");
  switch (spec.variant) {
    case RewardVariant::Binary01:
    case RewardVariant::BinarySign:
      return 0.0;
    case RewardVariant::ConfWeighted:
      return correct ? 1.0 : 0.0;
    case RewardVariant::ConfSign:
      return correct ? 1.0 : -1.0;
    case RewardVariant::ConfClip: {
      const bool inside = s > 1.0 - spec.epsilon && s < 1.0;
      if (!inside) return 0.0;
      return correct ? 1.0 : -1.0;
    }
  }
  throw std::invalid_argument("shape_slope: bad reward variant");
}

}  // namespace confclip
