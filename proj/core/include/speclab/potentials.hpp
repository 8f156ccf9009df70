#pragma once

#include "speclab/grid.hpp"

#include <cstdint>

namespace speclab {

enum class PotentialKind { well, smooth_bump, hardy, sparse_bumps, random_lattice, oscillatory };
enum class RandomDist { rademacher, uniform };  // both zero-mean

const char* to_string(PotentialKind k);

/// Generator description for every potential class in use. All generators are
/// closed-form at grid nodes and deterministic in the seed.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::well;

  // well / smooth_bump / oscillatory share these
  double height = 1.0;                 // well depth or bump height (>= 0)
  double radius = 1.0;                 // well radius
  double width = 1.0;                  // bump width
  int order = 3;                       // bump smoothness: (1-t^2)^order, C^{order-1}
  std::array<double, 2> center{0, 0};

  // hardy: c / (1+|x|^2), c <= (d-2)^2/4
  int hardy_d = 3;
  double coupling = 0.25;

  // sparse_bumps: sum_k heights[k] * B((r-centers[k])/widths[k])
  std::vector<double> widths, gaps, heights, centers;

  // random_lattice: V = sum_n omega_n v_n chi(x-n) on unit cells,
  // v_n = height * (1+|n|)^{-amplitude_decay}
  RandomDist dist = RandomDist::rademacher;
  uint64_t seed = 0;
  double amplitude_decay = 0.0;

  // oscillatory: height * cos(wavevector*x1) * (1+|x|^2)^{-envelope_power/2}
  double wavevector = 1.0;
  double envelope_power = 0.0;

  void validate() const;
};

/// Evaluate the generator at grid nodes. Values match the closed form exactly.
Field sample(const PotentialSpec& spec, const DomainSpec& domain);

/// V_omega realization with an explicit seed (bit-identical for equal seeds).
Field random_lattice_realization(const PotentialSpec& spec, uint64_t seed,
                                 const DomainSpec& domain);

/// Angular average of a 2D field: Vbar(r) = (1/2pi r) int_{|x|=r} V dS, sampled by
/// the midpoint rule with `angular_points` points and bilinear interpolation.
Field spherical_average(const Field& V, const DomainSpec& radial, int angular_points = 0);

/// Molchanov-type sparse radial battery: smooth bumps with the width law
/// w_k = w0 k^{-1/3} (w0 a quarter of the single-bump binding threshold) and
/// center gaps g_k = 10k, with bump heights scheduled so the radial operator on
/// [r_min, R] keeps an empty negative spectrum (Bargmann-small shells) while the
/// weighted quadrature of V^{1/2} keeps growing with R.
struct MolchanovResult {
  PotentialSpec spec;            // kind = sparse_bumps, truncated to radius R
  double p_target = 0.5;
  double binding_width = 0.0;    // calibrated single-bump threshold width
  double bargmann_sum = 0.0;     // sum_k h_k w_k r_k * int B, < 1 certifies no s-wave state
};
MolchanovResult molchanov_sparse(double p_target, double box_radius);

/// Binding threshold width of a single unit-height C^2 bump at the origin in d=3,
/// located by bisection of count_below on [r_eps, 4w].
double single_bump_binding_width(int order = 3);

}  // namespace speclab
