#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace emd {

// Deterministic random source. All derived draws are written out by hand
// because the stdlib distribution templates are implementation-defined;
// only mt19937_64's output stream is pinned by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_real() { return (eng_() >> 11) * (1.0 / 9007199254740992.0); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our n.
  int next_int(int n) { return static_cast<int>(eng_() % static_cast<uint64_t>(n)); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_real(); }

  bool bernoulli(double p) { return next_real() < p; }

  // Fisher-Yates, spelled out so the permutation is stable across stdlibs.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = eng_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace emd
