#pragma once

#include <cstdint>
#include <stdexcept>

namespace confclip {

using TokenId = std::int32_t;

// Token space of the generative policy. Tokens are dense ids 0..size-1.
// By convention the arithmetic tasks use ids 0..9 as digits and reserve the
// highest id for EOS; ids in between (if any) are filler content tokens.
struct Vocab {
  TokenId size = 0;
  TokenId eos = 0;

  Vocab() = default;
  Vocab(TokenId size_, TokenId eos_) : size(size_), eos(eos_) {
    if (size < 2) throw std::invalid_argument("Vocab: size must be >= 2");
    if (eos < 0 || eos >= size)
      throw std::invalid_argument("Vocab: eos must be a member token");
  }

  // Digits + EOS-as-last-id layout used by the task suites.
  static Vocab with_digits(TokenId size_) { return Vocab(size_, size_ - 1); }

  bool contains(TokenId t) const { return t >= 0 && t < size; }
  bool operator==(const Vocab&) const = default;
};

}  // namespace confclip
