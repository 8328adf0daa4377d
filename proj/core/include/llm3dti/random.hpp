#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "llm3dti/numkit.hpp"

namespace llm3dti {

// Seeded pseudo-random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniform, gaussian and bounded-integer
// draws are derived here rather than through <random> distributions, whose
// algorithms vary between standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Standard normal via Box–Muller.
  double gaussian();
  double gaussian(double mean, double stddev);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  std::vector<std::size_t> permutation(std::size_t n);
  Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);
  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

  // Independent child stream keyed by a label; same (seed, label) gives the
  // same child.
  RandomStream derive(std::string_view label) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

RandomStream seeded_stream(std::uint64_t seed);

}  // namespace llm3dti
