#ifndef GLOBUG_HASH_HPP
#define GLOBUG_HASH_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace globug {

/// 64-bit FNV-1a, stable across platforms and runs. Used for artifact
/// fingerprints and for seeding per-document RNG streams.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  /// Updates with the bytes followed by a separator so that ("ab","c") and
  /// ("a","bc") hash differently.
  Fnv1a& field(std::string_view bytes) noexcept {
    update(bytes);
    return update(std::string_view("\x1f", 1));
  }

  std::uint64_t digest() const noexcept { return state_; }

  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string Fnv1a::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = state_;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::uint64_t fnv1a(std::string_view bytes) noexcept {
  return Fnv1a().update(bytes).digest();
}

}  // namespace globug

#endif  // GLOBUG_HASH_HPP
