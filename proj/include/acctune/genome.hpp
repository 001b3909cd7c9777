#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/errors.hpp"

namespace acctune {

// Fixed-length bit vector over the candidate loops of a run. Bit k = 1 means
// the offload directive is inserted above candidate loop k. Genomes are value
// types: comparable, ordered (lexicographic, which matches bit-string order)
// and hashable so they can key the measurement cache.
class Genome {
 public:
  Genome() = default;
  explicit Genome(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  static Genome zeros(std::size_t n) { return Genome(std::vector<std::uint8_t>(n, 0)); }
  static Genome ones(std::size_t n) { return Genome(std::vector<std::uint8_t>(n, 1)); }

  static Genome from_string(std::string_view s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw Error("genome string must be over {0,1}: " + std::string(s));
      bits.push_back(c == '1' ? 1 : 0);
    }
    return Genome(std::move(bits));
  }

  std::string to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) s[i] = '1';
    return s;
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend auto operator<=>(const Genome&, const Genome&) = default;

  struct Hash {
    std::size_t operator()(const Genome& g) const {
      // FNV-1a over the bit bytes; stable across platforms.
      std::uint64_t h = 1469598103934665603ull;
      for (auto b : g.bits_) {
        h ^= b;
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace acctune
