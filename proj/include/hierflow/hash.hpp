#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace hierflow {

// 64-bit FNV-1a, used for content-derived ids.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n) {
    auto p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& str(std::string_view s) {
    bytes(s.data(), s.size());
    return u8(0xff);
  }
  Fnv1a& u8(unsigned char v) { return bytes(&v, 1); }
  Fnv1a& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<unsigned char>(v >> (8 * i)));
    return *this;
  }
  Fnv1a& f64(double v) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    __builtin_memcpy(&bits, &v, sizeof v);
    return u64(bits);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex_id(std::string_view prefix, std::uint64_t h, int digits = 12) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(prefix) + std::string(buf + (16 - digits));
}

}  // namespace hierflow
