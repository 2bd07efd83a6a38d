#ifndef GVF_RNG_HPP
#define GVF_RNG_HPP

#include <cmath>
#include <cstdint>

namespace gvf {

// Counter-based random stream built on the SplitMix64 finalizer.  A stream is
// keyed by hashing (seed, purpose tag, path index, substream index); the i-th
// output word is mix(key + GOLDEN * (i + 1)).  Every draw is a pure function
// of (key, i), so streams can be split freely: adding modes, paths, or
// channels never perturbs the draws of existing ones.  Statistical quality is
// that of SplitMix64, which is ample for Monte-Carlo use.
class RngStream {
 public:
  enum Purpose : std::uint64_t {
    kSignalNoise = 1,       // driving increments of the mode-k Volterra process
    kObservationNoise = 2,  // additive observation channel noise
  };

  RngStream(std::uint64_t seed, Purpose purpose, std::uint64_t path_index,
            std::uint64_t substream)
      : key_(chain(chain(chain(mix(seed ^ kGolden), static_cast<std::uint64_t>(purpose)),
                         path_index),
                   substream)) {}

  // Uniform draw in the open interval (0, 1]; safe under log().
  double uniform(std::uint64_t i) const {
    return (static_cast<double>(word(i) >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, consuming words 2i and 2i+1.  Stateless:
  // the paired sine draw is discarded so that normal(i) depends on i alone.
  double normal(std::uint64_t i) const {
    const double u1 = uniform(2 * i);
    const double u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t word(std::uint64_t i) const { return mix(key_ + kGolden * (i + 1)); }
  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t chain(std::uint64_t state, std::uint64_t word) {
    return mix(state + kGolden * (word + 1));
  }

  std::uint64_t key_;
};

}  // namespace gvf

#endif
