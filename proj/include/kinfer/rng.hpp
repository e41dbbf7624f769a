#pragma once

#include <cstdint>
#include <limits>

namespace kinfer {

// Counter-based generator: the i-th output of a stream is a pure function of
// (key, i), computed with the SplitMix64 finalizer. Streams for independent
// runs are keyed by (master seed, run id), so results do not depend on the
// order in which runs are scheduled.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix(key_ + kGamma * ++counter_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal();

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed for run `run_id` of an experiment driven by `master_seed`.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_id) {
  return CounterRng::mix(CounterRng::mix(master_seed) + 0x9e3779b97f4a7c15ULL * (run_id + 1));
}

}  // namespace kinfer
