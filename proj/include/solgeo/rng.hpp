#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "solgeo/linalg.hpp"

namespace solgeo {

/// Deterministic RNG. mt19937_64 output is pinned by the standard; the value
/// mappings below are our own so that streams are identical across platforms
/// and thread counts (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Sub-stream for an indexed task; lets parallel workers draw identical values.
  Rng fork(std::uint64_t index) const {
    std::uint64_t x = seed_mix_ ^ (0x9e3779b97f4a7c15ull + index);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return Rng(x ^ (x >> 31));
  }

  double uniform() {  // [0, 1)
    return (gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Vector gaussian_vector(int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal();
    return v;
  }

  /// Uniform on the Euclidean unit sphere.
  Vector sphere_vector(int dim) {
    Vector v = gaussian_vector(dim);
    double n = v.norm();
    while (n < 1e-12) {
      v = gaussian_vector(dim);
      n = v.norm();
    }
    return v / n;
  }

  std::uint64_t raw() { return gen_(); }

  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_mix_ = gen_();
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace solgeo
