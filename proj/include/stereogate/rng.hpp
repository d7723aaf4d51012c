#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace stereogate {

// All randomness in the library flows through Rng. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
// transforms to uniform reals, bounded integers and normals are implemented
// here rather than via <random> distributions so results do not depend on
// the standard library vendor.
//
// Child streams are derived with derive_seed(parent, stream), a SplitMix64
// mix of the two values. Protocols use it to give every fold, tree, restart
// and sub-model an independent, order-free seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound). bound must be > 0.
  std::size_t below(std::size_t bound);

  // Standard normal by the Marsaglia polar method.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stereogate
