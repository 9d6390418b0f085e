#pragma once

// Seeded random streams. Every Monte Carlo unit (draw, replication) gets its
// own engine derived from the run seed and its indices, so results never
// depend on scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace fdott {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for the stream labelled by (seed, ids...).
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

/// Stream tags keep independent uses of one seed apart.
enum class Stream : std::uint64_t {
  kTruth = 1,
  kData = 2,
  kNullDraw = 3,
  kAltDraw = 4,
  kLocalNull = 5,
  kLocalShift = 6,
  kPosthoc = 7,
  kConvergence = 8,
};

inline Rng derive_rng(std::uint64_t seed, Stream tag, std::uint64_t a, std::uint64_t b = 0) {
  return derive_rng(seed, {static_cast<std::uint64_t>(tag), a, b});
}

inline void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  std::normal_distribution<double> z(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = z(rng);
}

/// Multinomial counts by sequential conditional binomials.
inline std::vector<std::int64_t> multinomial(Rng& rng, std::int64_t n, const Eigen::VectorXd& p) {
  const Eigen::Index k = p.size();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  std::int64_t left = n;
  double mass_left = 1.0;
  for (Eigen::Index i = 0; i + 1 < k && left > 0; ++i) {
    if (p[i] <= 0.0) continue;
    const double q = mass_left > 0.0 ? std::min(1.0, p[i] / mass_left) : 1.0;
    std::binomial_distribution<std::int64_t> bin(left, q);
    const std::int64_t c = q >= 1.0 ? left : bin(rng);
    counts[static_cast<std::size_t>(i)] = c;
    left -= c;
    mass_left -= p[i];
  }
  if (left > 0) {
    // Remaining mass goes to the last category with positive weight.
    Eigen::Index last = k - 1;
    while (last > 0 && p[last] <= 0.0) --last;
    counts[static_cast<std::size_t>(last)] += left;
  }
  return counts;
}

/// Uniform random permutation of v in place.
template <class T>
void shuffle(Rng& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace fdott
