#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "confclip/vocab.hpp"

namespace confclip {

// Conditioning identifier for a task prompt. Two prompts with the same
// content (same operands, operator, modulus) share a key, so the tabular
// policy conditions on what the question asks, not on which suite row it
// came from -- the finite-state stand-in for conditioning on prompt text.
struct PromptKey {
  std::int64_t id = 0;
  bool operator==(const PromptKey&) const = default;
};

inline constexpr int kMaxContextOrder = 8;

// Autoregressive conditioning state: the prompt key plus the last
// `context order` generated tokens. Slots beyond `size` stay zeroed so that
// equality and hashing can treat the array uniformly.
struct ContextKey {
  std::int64_t prompt_id = 0;
  std::uint8_t size = 0;
  std::array<TokenId, kMaxContextOrder> prefix{};

  ContextKey() = default;
  explicit ContextKey(PromptKey key) : prompt_id(key.id) {}

  // Appends a generated token, keeping only the trailing `order` tokens.
  void push(TokenId tok, int order) {
    if (order <= 0) return;
    if (order > kMaxContextOrder)
      throw std::invalid_argument("ContextKey: context order exceeds limit");
    if (size < order) {
      prefix[size++] = tok;
      return;
    }
    for (int i = 1; i < order; ++i) prefix[i - 1] = prefix[i];
    prefix[order - 1] = tok;
  }

  bool operator==(const ContextKey& o) const {
    return prompt_id == o.prompt_id && size == o.size && prefix == o.prefix;
  }

  // Lexicographic order for stable text dumps.
  std::strong_ordering operator<=>(const ContextKey& o) const {
    if (auto c = prompt_id <=> o.prompt_id; c != 0) return c;
    if (auto c = size <=> o.size; c != 0) return c;
    for (int i = 0; i < size; ++i)
      if (auto c = prefix[i] <=> o.prefix[i]; c != 0) return c;
    return std::strong_ordering::equal;
  }
};

struct ContextKeyHash {
  std::size_t operator()(const ContextKey& k) const {
    std::uint64_t h = mix(static_cast<std::uint64_t>(k.prompt_id), 0x243f6a8885a308d3ULL);
    h = mix(h, k.size);
    for (int i = 0; i < k.size; ++i)
      h = mix(h, static_cast<std::uint64_t>(k.prefix[i]) + 1);
    return static_cast<std::size_t>(h);
  }

 private:
  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * 0xff51afd7ed558ccdULL;
  }
};

}  // namespace confclip
