#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hierflow {

// Fixed-size packed bit vector. Bits past size() in the last word are always 0.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}
  Bitset(std::size_t size, std::span<const std::uint64_t> words)
      : size_(size), words_(words.begin(), words.end()) {}

  std::size_t size() const { return size_; }

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  std::size_t count() const { return popcount(words_); }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  Bitset& operator|=(const Bitset& other) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
    return *this;
  }

  bool operator==(const Bitset&) const = default;

  static std::size_t popcount(std::span<const std::uint64_t> words) {
    std::size_t total = 0;
    for (auto w : words) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  static std::size_t and_count(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b) {
    std::size_t total = 0;
    for (std::size_t w = 0; w < a.size(); ++w) {
      total += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
    }
    return total;
  }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace hierflow
