#include "speclab/potentials.hpp"

#include "speclab/spectra.hpp"

#include <cmath>
#include <stdexcept>

namespace speclab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("speclab: " + msg); }

double bump_profile(double t, int order) {
  const double s = 1.0 - t * t;
  return s <= 0.0 ? 0.0 : std::pow(s, order);
}

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// per-cell coin, independent of the sampling grid
double cell_omega(uint64_t seed, long long n1, long long n2, RandomDist dist) {
  uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dull);
  h = mix64(h ^ static_cast<uint64_t>(n1) * 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ static_cast<uint64_t>(n2) * 0xc2b2ae3d27d4eb4full);
  if (dist == RandomDist::rademacher) return (h & 1ull) ? 1.0 : -1.0;
  return 2.0 * ((h >> 11) * 0x1.0p-53) - 1.0;  // uniform on (-1,1), zero mean
}

double lattice_value(const PotentialSpec& spec, uint64_t seed, double x, double y, bool two_d) {
  const long long n1 = static_cast<long long>(std::floor(x));
  const long long n2 = two_d ? static_cast<long long>(std::floor(y)) : 0;
  const double cell_norm = two_d ? std::hypot(static_cast<double>(n1), static_cast<double>(n2))
                                 : std::abs(static_cast<double>(n1));
  const double vn = spec.height * std::pow(1.0 + cell_norm, -spec.amplitude_decay);
  return cell_omega(seed, n1, n2, spec.dist) * vn;
}

double eval_point(const PotentialSpec& spec, uint64_t seed, double x, double y, bool two_d) {
  const double rr = two_d ? std::hypot(x, y) : std::abs(x);
  switch (spec.kind) {
    case PotentialKind::well: {
      const double dist = two_d ? std::hypot(x - spec.center[0], y - spec.center[1])
                                : std::abs(x - spec.center[0]);
      return dist < spec.radius ? spec.height : 0.0;
    }
    case PotentialKind::smooth_bump: {
      const double dist = two_d ? std::hypot(x - spec.center[0], y - spec.center[1])
                                : std::abs(x - spec.center[0]);
      return spec.height * bump_profile(dist / spec.width, spec.order);
    }
    case PotentialKind::hardy:
      return spec.coupling / (1.0 + rr * rr);
    case PotentialKind::sparse_bumps: {
      double v = 0.0;
      for (size_t k = 0; k < spec.centers.size(); ++k)
        v += spec.heights[k] * bump_profile((rr - spec.centers[k]) / spec.widths[k], spec.order);
      return v;
    }
    case PotentialKind::random_lattice:
      return lattice_value(spec, seed, x, y, two_d);
    case PotentialKind::oscillatory:
      return spec.height * std::cos(spec.wavevector * x) *
             std::pow(1.0 + rr * rr, -spec.envelope_power / 2);
  }
  return 0.0;
}

}  // namespace

const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::well: return "well";
    case PotentialKind::smooth_bump: return "smooth_bump";
    case PotentialKind::hardy: return "hardy";
    case PotentialKind::sparse_bumps: return "sparse_bumps";
    case PotentialKind::random_lattice: return "random_lattice";
    case PotentialKind::oscillatory: return "oscillatory";
  }
  return "?";
}

void PotentialSpec::validate() const {
  if (height < 0) fail("potential height/depth must be nonnegative");
  switch (kind) {
    case PotentialKind::well:
      if (radius <= 0) fail("well radius must be positive");
      break;
    case PotentialKind::smooth_bump:
      if (width <= 0) fail("bump width must be positive");
      if (order < 2) fail("bump order must be at least 2 for C^1 sampling");
      break;
    case PotentialKind::hardy:
      if (hardy_d < 3) fail("hardy potential requires d >= 3");
      if (coupling > (hardy_d - 2) * (hardy_d - 2) / 4.0 + 1e-15)
        fail("hardy coupling exceeds (d-2)^2/4");
      if (coupling < 0) fail("hardy coupling must be nonnegative");
      break;
    case PotentialKind::sparse_bumps: {
      const size_t m = centers.size();
      if (widths.size() != m || heights.size() != m) fail("sparse_bumps arrays must align");
      for (size_t k = 0; k < m; ++k)
        if (widths[k] <= 0 || heights[k] < 0) fail("sparse_bumps widths/heights must be positive");
      break;
    }
    case PotentialKind::random_lattice:
      break;  // both supported distributions are zero-mean by construction
    case PotentialKind::oscillatory:
      if (envelope_power < 0) fail("oscillatory envelope power must be nonnegative");
      break;
  }
}

Field sample(const PotentialSpec& spec, const DomainSpec& domain) {
  spec.validate();
  domain.validate();
  if (spec.kind == PotentialKind::hardy && domain.kind == DomainKind::radial &&
      domain.d != spec.hardy_d)
    fail("hardy potential dimension differs from the radial domain dimension");
  Field f = make_field(domain);
  const bool two_d = domain.kind == DomainKind::rectangle;
  for (int p = 0; p < f.size(); ++p) {
    const auto xy = node_coords(domain, p);
    f.values[p] = eval_point(spec, spec.seed, xy[0], xy[1], two_d);
  }
  if (!f.values.allFinite()) fail("sampled potential is not bounded");
  return f;
}

Field random_lattice_realization(const PotentialSpec& spec, uint64_t seed,
                                 const DomainSpec& domain) {
  if (spec.kind != PotentialKind::random_lattice)
    fail("random_lattice_realization requires a random_lattice spec");
  PotentialSpec s = spec;
  s.seed = seed;
  return sample(s, domain);
}

Field spherical_average(const Field& V, const DomainSpec& radial, int angular_points) {
  if (V.domain.kind != DomainKind::rectangle)
    fail("spherical_average expects a field on a 2D grid");
  radial.validate();
  if (radial.kind != DomainKind::radial || radial.d != 2)
    fail("spherical_average output domain must be radial with d=2");
  const AxisGeom gx = axis_geom(V.domain, 0), gy = axis_geom(V.domain, 1);
  const double hull = std::min(std::min(-gx.node(0), gx.node(gx.n - 1)),
                               std::min(-gy.node(0), gy.node(gy.n - 1)));
  if (!(hull > 0)) fail("spherical_average: grid does not surround the origin");
  if (radial.b1 > hull) fail("spherical_average: radial range exits the grid");

  const int M = angular_points > 0 ? angular_points : std::max(64, 4 * V.domain.n);
  auto interp = [&](double x, double y) {
    const double fx = (x - gx.x0) / gx.h, fy = (y - gy.x0) / gy.h;
    int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy));
    ix = std::max(0, std::min(gx.n - 2, ix));
    iy = std::max(0, std::min(gy.n - 2, iy));
    const double tx = fx - ix, ty = fy - iy;
    const int p00 = iy * V.domain.n + ix;
    const double v00 = V.values[p00], v10 = V.values[p00 + 1];
    const double v01 = V.values[p00 + V.domain.n], v11 = V.values[p00 + V.domain.n + 1];
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
  };

  Field out = make_field(radial);
  const AxisGeom gr = axis_geom(radial, 0);
  for (int i = 0; i < radial.n; ++i) {
    const double r = gr.node(i);
    double s = 0.0;
    for (int j = 0; j < M; ++j) {
      const double th = 2.0 * M_PI * (j + 0.5) / M;
      s += interp(r * std::cos(th), r * std::sin(th));
    }
    out.values[i] = s / M;
  }
  return out;
}

double single_bump_binding_width(int order) {
  auto binds = [&](double w) {
    PotentialSpec b;
    b.kind = PotentialKind::smooth_bump;
    b.height = 1.0;
    b.width = w;
    b.order = order;
    const double rmax = std::max(4.0 * w, 4.0);
    auto dom = DomainSpec::radial(rmax * 2.5e-4, rmax, 3, 2000);
    auto V = sample(b, dom);
    auto op = build_operator(dom, V, -1.0, radial_centrifugal_coefficient(3));
    return count_below(op, 0.0).count > 0;
  };
  double lo = 0.25, hi = 16.0;
  if (binds(lo) || !binds(hi)) fail("binding-width bisection bracket invalid");
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (binds(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

MolchanovResult molchanov_sparse(double p_target, double box_radius) {
  if (!(box_radius > 0)) fail("molchanov_sparse requires a positive box radius");
  MolchanovResult out;
  out.p_target = p_target;
  out.binding_width = single_bump_binding_width(3);

  PotentialSpec s;
  s.kind = PotentialKind::sparse_bumps;
  s.order = 3;
  const double w0 = out.binding_width / 4.0;
  const double bump_mass = 32.0 / 35.0;  // int (1-t^2)^3 dt over [-1,1]
  const double bargmann_budget = 0.25;   // sum_k h_k w_k r_k * bump_mass = budget * sum 1/k^2

  double r = 6.0;
  for (int k = 1;; ++k) {
    if (r > box_radius) break;
    const double wk = w0 * std::pow(static_cast<double>(k), -1.0 / 3.0);
    const double hk = std::min(1.0, bargmann_budget / (k * static_cast<double>(k) * r * wk * bump_mass));
    s.centers.push_back(r);
    s.widths.push_back(wk);
    s.heights.push_back(hk);
    s.gaps.push_back(10.0 * k);
    out.bargmann_sum += hk * wk * r * bump_mass;
    r += 10.0 * k;
  }
  out.spec = s;
  return out;
}

}  // namespace speclab
