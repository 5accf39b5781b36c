#pragma once

#include <cstdint>
#include <string>

namespace morphoscope {

// FNV-1a 64-bit running hash; used for dataset/content ids in provenance.
class Fnv1a {
 public:
  void add_byte(unsigned char b) {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
  }
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) add_byte(p[i]);
  }
  void add_string(const std::string& s) {
    add_bytes(s.data(), s.size());
    add_byte(0);  // separator so concatenations don't collide
  }
  void add_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) add_byte(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a_file_hex(const std::string& path);

// Shortest decimal that round-trips the double (17 significant digits max).
std::string format_double(double v);

}  // namespace morphoscope
