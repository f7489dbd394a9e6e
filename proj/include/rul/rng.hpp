#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "rul/matrix.hpp"

namespace rul {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Seeded generator with a platform-stable stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library distributions are not (their algorithms are
/// implementation-defined), so every draw is converted here:
///   - uniform doubles take the top 53 bits: (x >> 11) * 2^-53, in [0, 1)
///   - bounded integers use rejection sampling on the raw 64-bit output
///   - shuffles are Fisher-Yates driven by the bounded integer draw
/// Independent streams for split / init / shuffle are derived with
/// `derive(tag)`, which mixes the seed and an FNV-1a hash of the tag through
/// splitmix64.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  SeededRng derive(std::string_view tag) const;

  std::uint64_t next_u64() { return engine_(); }
  double next_unit();  // [0, 1)
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t bound);  // [0, bound)

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

Matrix rng_uniform(SeededRng& rng, double lo, double hi, std::size_t rows, std::size_t cols);
std::vector<std::size_t> rng_shuffle(SeededRng& rng, std::size_t n);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace rul
