#pragma once

#include "error.hpp"
#include "netlist.hpp"
#include "simulate.hpp"

#include <bit>
#include <optional>
#include <random>

namespace keylock {

struct EquivalenceResult {
  bool equal = true;
  /// A distinguishing input vector when !equal.
  BitVector counterexample;

  explicit operator bool() const { return equal; }
};

inline constexpr std::size_t max_exhaustive_inputs = 20;

namespace detail {

inline void check_interface(const Netlist& a, const Netlist& b)
{
  if (a.primary_inputs().size() != b.primary_inputs().size() ||
      a.primary_outputs().size() != b.primary_outputs().size()) {
    throw Error(ErrorCode::interface_mismatch, "netlists differ in primary input/output counts");
  }
}

/// Compares two simulators on one packed word; returns the first differing pattern lane.
inline std::optional<int> first_difference(const Simulator& a, const Simulator& b,
                                           std::span<const std::uint64_t> words, std::uint64_t valid)
{
  const auto oa = a.run(words);
  const auto ob = b.run(words);
  std::uint64_t diff = 0;
  for (std::size_t i = 0; i < oa.size(); ++i) diff |= oa[i] ^ ob[i];
  diff &= valid;
  if (!diff) return std::nullopt;
  return std::countr_zero(diff);
}

inline BitVector lane(std::span<const std::uint64_t> words, int bit)
{
  BitVector v(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) v[i] = ((words[i] >> bit) & 1U) != 0;
  return v;
}

} // namespace detail

/// Checks all 2^#PI input vectors (at most 2^20).
inline EquivalenceResult equivalence_exhaustive(const Netlist& a, const Netlist& b, const BitVector& key_a = {},
                                                const BitVector& key_b = {})
{
  detail::check_interface(a, b);
  const std::size_t pis = a.primary_inputs().size();
  if (pis > max_exhaustive_inputs) {
    throw Error(ErrorCode::too_many_inputs, std::to_string(pis) + " inputs exceed the exhaustive limit");
  }
  const Simulator sa(a, key_a);
  const Simulator sb(b, key_b);
  for (std::uint64_t w = 0; w < exhaustive_word_count(pis); ++w) {
    const auto words = exhaustive_words(pis, w);
    if (auto bit = detail::first_difference(sa, sb, words, exhaustive_valid_mask(pis, w))) {
      return {false, detail::lane(words, *bit)};
    }
  }
  return {};
}

/// Compares on `vectors` random input vectors (rounded up to a multiple of 64).
inline EquivalenceResult equivalence_random(const Netlist& a, const Netlist& b, const BitVector& key_a,
                                            const BitVector& key_b, std::size_t vectors, std::uint64_t seed)
{
  detail::check_interface(a, b);
  const Simulator sa(a, key_a);
  const Simulator sb(b, key_b);
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> words(a.primary_inputs().size());
  for (std::size_t done = 0; done < vectors; done += 64) {
    for (auto& w : words) w = rng();
    if (auto bit = detail::first_difference(sa, sb, words, ~std::uint64_t{0})) {
      return {false, detail::lane(words, *bit)};
    }
  }
  return {};
}

} // namespace keylock
