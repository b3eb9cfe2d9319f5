#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mtprompt {

/// Seeded sampler with a fully specified output sequence.
///
/// The engine is std::mt19937_64 (bit-exact across standard libraries). Standard
/// distributions are implementation-defined, so bounded integers are drawn here
/// by rejection sampling on the raw 64-bit output, and shuffling is a plain
/// Fisher-Yates pass from the back. Every sampled split or demonstration in the
/// project goes through this class, so a seed reproduces on any machine.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+rejection+fisher-yates";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform real in [0, 1) built from the top 53 bits.
  double unit();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices from [0, n), in draw order. Requires k <= n.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtprompt
