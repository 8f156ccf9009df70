#pragma once

#include <cmath>
#include <cstdint>

// deterministic rng for tests, independent of std library distributions
struct TestRng {
  uint64_t state;
  explicit TestRng(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double u01() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * u01(); }
  int index(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }
};

// ground state of the 1D square well -psi'' - depth*1_{|x|<a} psi = lambda psi,
// from the even-sector matching equation k tan(k a) = kappa, k^2+kappa^2 = depth.
// Independent transcendental-root oracle; bisection on (0, min(sqrt(depth), pi/(2a))).
inline double square_well_ground_state(double depth, double a) {
  auto f = [&](double k) { return k * std::tan(k * a) - std::sqrt(depth - k * k); };
  double lo = 1e-12, hi = std::min(std::sqrt(depth) - 1e-12, M_PI / (2 * a) - 1e-12);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  const double k = 0.5 * (lo + hi);
  return k * k - depth;
}
