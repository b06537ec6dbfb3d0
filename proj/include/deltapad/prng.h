// Deterministic randomness shared by the build and the server-side replay.
//
// Both sides must draw bit-identical streams, so the generator and the hash
// are fixed here by their constants: SplitMix64 and FNV-1a-64.

#ifndef DELTAPAD_PRNG_H_
#define DELTAPAD_PRNG_H_

#include <cstdint>
#include <string_view>

namespace deltapad {

inline constexpr uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ull;
inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

// The SplitMix64 output function.
constexpr uint64_t SplitMixFinalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Prng {
 public:
  explicit Prng(uint64_t seed) : state_(seed) {}

  uint64_t Next() {
    state_ += kSplitMixGamma;
    return SplitMixFinalize(state_);
  }

  // Uniform in [0, bound) by modulo reduction; bound > 0. The bias is
  // below 2^-32 for the bounds used here and keeps every implementation
  // in lock step.
  uint64_t Below(uint64_t bound) { return Next() % bound; }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

constexpr uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = kFnvOffsetBasis;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

// Per-function (or per-block) reseed: FNV-1a-64 of the identifier, XORed
// with the scheme seed, passed once through the SplitMix64 output function.
constexpr uint64_t FunctionReseed(std::string_view identifier,
                                  uint64_t scheme_seed) {
  return SplitMixFinalize(Fnv1a64(identifier) ^ scheme_seed);
}

}  // namespace deltapad

#endif  // DELTAPAD_PRNG_H_
