#include "speclab/measure.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace speclab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("speclab: " + msg); }

constexpr int kMeasureDenseCap = 4096;  // full decompositions stay dense

std::optional<double> radial_alpha(const DomainSpec& d) {
  if (d.kind == DomainKind::radial) return radial_centrifugal_coefficient(d.d);
  return std::nullopt;
}

}  // namespace

SpectralMeasure spectral_measure(const DiscreteOperator& op, const Field& f, bool annulus_mode) {
  if (op.dim() > kMeasureDenseCap)
    fail("spectral_measure: operator too large for a full decomposition");
  if (f.size() != op.domain.total_nodes()) fail("spectral_measure: vector size mismatch");
  if (annulus_mode) {
    for (int p = 0; p < f.size(); ++p) {
      const double r = node_abs(op.domain, p);
      if (f.values[p] != 0.0 && !(r > 1.0 && r < 2.0))
        fail("spectral_measure: annulus mode requires supp f inside 1 < |x| < 2");
    }
  }
  Eigen::VectorXd fv(op.dim());
  for (int i = 0; i < op.dim(); ++i) fv[i] = f.values[op.nodes[i]];
  const double norm = fv.norm();
  if (!(norm > 0)) fail("spectral_measure: zero vector");
  fv /= norm;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.matrix)};
  SpectralMeasure mu;
  mu.lambdas.resize(op.dim());
  mu.weights.resize(op.dim());
  for (int k = 0; k < op.dim(); ++k) {
    mu.lambdas[k] = es.eigenvalues()[k];
    const double c = es.eigenvectors().col(k).dot(fv);
    mu.weights[k] = c * c;
    mu.total_mass += c * c;
  }
  return mu;
}

Field spectral_test_function(const DomainSpec& domain) {
  Field f = make_field(domain);
  for (int p = 0; p < f.size(); ++p) {
    const double r = node_abs(domain, p);
    if (r > 1.0 && r < 2.0) {
      const double t = 2.0 * (r - 1.5);
      f.values[p] = std::pow(1.0 - t * t, 3);
    }
  }
  const double n = f.values.norm();
  if (!(n > 0)) fail("spectral_test_function: grid has no nodes in 1 < r < 2");
  f.values /= n;
  return f;
}

SmoothedDensity smooth_density(const SpectralMeasure& mu, double bandwidth, double lambda_max,
                               int samples) {
  if (!(bandwidth > 0)) fail("smooth_density requires a positive bandwidth");
  if (samples < 8) fail("smooth_density: too few samples");
  SmoothedDensity d;
  d.bandwidth = bandwidth;
  d.grid.setLinSpaced(samples, 0.0, lambda_max);
  d.values.setZero(samples);
  const double norm = 1.0 / (bandwidth * std::sqrt(2 * M_PI));
  for (size_t k = 0; k < mu.lambdas.size(); ++k) {
    if (mu.weights[k] == 0.0) continue;
    for (int i = 0; i < samples; ++i) {
      const double t = (d.grid[i] - mu.lambdas[k]) / bandwidth;
      if (std::abs(t) > 40) continue;
      d.values[i] += mu.weights[k] * norm * std::exp(-0.5 * t * t);
    }
  }
  return d;
}

double TestFunctionSpec::operator()(double lambda) const {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double t = (lambda - mid) / half;
  if (std::abs(t) >= 1.0) return 0.0;
  return height * std::pow(1.0 - t * t, order);
}

EntropyReport entropy(const SmoothedDensity& density, const TestFunctionSpec& phi) {
  if (!(phi.a > 0)) fail("entropy: test function support must avoid 0");
  if (phi.b > density.grid[density.grid.size() - 1])
    fail("entropy: test function support exceeds the density window");
  if (!(phi.a < phi.b)) fail("entropy: empty support");

  EntropyReport rep;
  rep.bandwidth = density.bandwidth;
  const int n = static_cast<int>(density.grid.size());
  double acc = 0.0;
  double prev_g = 0.0, prev_x = phi.a;
  bool started = false;
  for (int i = 0; i < n; ++i) {
    const double x = density.grid[i];
    if (x < phi.a || x > phi.b) continue;
    const double p = phi(x);
    double g = 0.0;
    if (p > 0.0) {
      const double mu = density.values[i];
      if (mu < 1e-300) {
        rep.neg_infinity = true;
        rep.value = -std::numeric_limits<double>::infinity();
        return rep;
      }
      g = std::log(mu / p) * p;
    }
    if (started) acc += 0.5 * (g + prev_g) * (x - prev_x);
    prev_g = g;
    prev_x = x;
    started = true;
  }
  rep.value = acc;
  return rep;
}

double entropy_budget(const EigenResult& plus, const EigenResult& minus, double v_inf, double C) {
  return -C * (neg_sum(plus, 0.5) + neg_sum(minus, 0.5) + std::sqrt(v_inf) + 1.0);
}

TruncationResult truncate_potential(const Field& V0, const VectorField& A, double radius_n,
                                    double eps) {
  if (!(eps > 0 && eps < 1)) fail("truncate_potential requires eps in (0,1)");
  if (!V0.domain.same_grid(A.domain)) fail("truncate_potential: fields on different grids");
  const DomainSpec& spec = V0.domain;
  const int total = spec.total_nodes();
  const AxisGeom g = axis_geom(spec, 0);

  auto cdiff = [&](const Eigen::VectorXd& v, int p) {
    if (p == 0) return (v[1] - v[0]) / g.h;
    if (p == total - 1) return (v[p] - v[p - 1]) / g.h;
    return (v[p + 1] - v[p - 1]) / (2 * g.h);
  };

  Field w1 = make_field(spec), w2 = make_field(spec);
  for (int p = 0; p < total; ++p) {
    const double pos = std::max(V0.values[p], 0.0);
    const double neg = std::max(-V0.values[p], 0.0);
    const double chi = node_abs(spec, p) <= radius_n ? 1.0 : 0.0;
    w1.values[p] = -chi * neg;
    w2.values[p] = pos + cdiff(A.comps[0], p) + A.abs_sq(p) / (1.0 - eps);
  }

  TruncationResult out;
  out.V_trunc = w1 + w2;
  auto op = build_operator(spec, out.V_trunc, +1.0, radial_alpha(spec));
  out.count = count_below(op, 0.0).count;
  out.splitting = split_count_check(w1, w2, eps, radial_alpha(spec));
  out.splitting.bound_id = "truncation_splitting";
  return out;
}

// ---------------------------------------------------------------------------
// exact bounded-Lipschitz distance via concave piecewise-linear value functions
// ---------------------------------------------------------------------------

namespace {

// concave piecewise-linear function on [-1, 1], breakpoints sorted
struct ConcavePL {
  std::vector<double> x, v;

  double eval(double t) const {
    if (t <= x.front()) return v.front();
    if (t >= x.back()) return v.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const size_t i = static_cast<size_t>(it - x.begin());
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return (1 - w) * v[i - 1] + w * v[i];
  }

  // max over a window of radius d, then clip the domain back to [-1, 1]
  void sliding_max(double d) {
    size_t m1 = 0;
    for (size_t i = 1; i < x.size(); ++i)
      if (v[i] > v[m1]) m1 = i;
    size_t m2 = m1;
    while (m2 + 1 < x.size() && v[m2 + 1] == v[m1]) ++m2;
    std::vector<double> nx, nv;
    for (size_t i = 0; i < m1; ++i) {
      nx.push_back(x[i] - d);
      nv.push_back(v[i]);
    }
    nx.push_back(x[m1] - d);
    nv.push_back(v[m1]);
    nx.push_back(x[m2] + d);
    nv.push_back(v[m1]);
    for (size_t i = m2 + 1; i < x.size(); ++i) {
      nx.push_back(x[i] + d);
      nv.push_back(v[i]);
    }
    x.swap(nx);
    v.swap(nv);
    clip();
  }

  void clip() {
    ConcavePL c = *this;
    std::vector<double> nx{-1.0}, nv{c.eval(-1.0)};
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i] > -1.0 && x[i] < 1.0) {
        nx.push_back(x[i]);
        nv.push_back(v[i]);
      }
    nx.push_back(1.0);
    nv.push_back(c.eval(1.0));
    x.swap(nx);
    v.swap(nv);
  }

  void add_linear(double slope) {
    for (size_t i = 0; i < x.size(); ++i) v[i] += slope * x[i];
  }

  double max_value() const { return *std::max_element(v.begin(), v.end()); }
};

}  // namespace

double bounded_lipschitz_distance(const SpectralMeasure& mu, const SpectralMeasure& nu) {
  // merge atoms into a signed measure, sorted by position
  std::vector<std::pair<double, double>> atoms;
  for (size_t k = 0; k < mu.lambdas.size(); ++k)
    if (mu.weights[k] != 0.0) atoms.push_back({mu.lambdas[k], mu.weights[k]});
  for (size_t k = 0; k < nu.lambdas.size(); ++k)
    if (nu.weights[k] != 0.0) atoms.push_back({nu.lambdas[k], -nu.weights[k]});
  if (atoms.empty()) return 0.0;
  std::sort(atoms.begin(), atoms.end());

  // coalesce near-coincident atoms to keep the DP small
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && a.first - merged.back().first < 1e-13)
      merged.back().second += a.second;
    else
      merged.push_back(a);
  }

  ConcavePL V;
  V.x = {-1.0, 1.0};
  V.v = {0.0, 0.0};
  V.add_linear(merged[0].second);
  for (size_t i = 1; i < merged.size(); ++i) {
    V.sliding_max(std::min(merged[i].first - merged[i - 1].first, 2.0));
    V.add_linear(merged[i].second);
  }
  return V.max_value();
}

SemicontinuityReport semicontinuity_experiment(const std::vector<Field>& family,
                                               const Field& v_limit, const Field& f,
                                               const TestFunctionSpec& phi, double bandwidth,
                                               double slack) {
  if (family.empty()) fail("semicontinuity_experiment: empty family");
  const DomainSpec& spec = v_limit.domain;
  auto alpha = radial_alpha(spec);
  const double lam_max = phi.b * 2.0;

  auto measure_of = [&](const Field& v) {
    auto op = build_operator(spec, v, +1.0, alpha);
    return spectral_measure(op, f);
  };
  SpectralMeasure mu = measure_of(v_limit);
  auto dens = smooth_density(mu, bandwidth, lam_max);
  SemicontinuityReport rep;
  rep.entropy_limit = entropy(dens, phi).value;

  for (const auto& v : family) {
    auto mk = measure_of(v);
    rep.dbl.push_back(bounded_lipschitz_distance(mk, mu));
    rep.entropies.push_back(entropy(smooth_density(mk, bandwidth, lam_max), phi).value);
  }

  rep.dbl_trend = true;
  for (size_t k = 1; k < rep.dbl.size(); ++k)
    rep.dbl_trend = rep.dbl_trend && rep.dbl[k] <= rep.dbl[k - 1] * 1.05 + 1e-12;
  rep.dbl_trend = rep.dbl_trend && rep.dbl.back() <= rep.dbl.front() + 1e-12;

  double liminf = std::numeric_limits<double>::infinity();
  for (size_t k = rep.entropies.size() / 2; k < rep.entropies.size(); ++k)
    liminf = std::min(liminf, rep.entropies[k]);
  rep.semicontinuity = rep.entropy_limit >= liminf - slack;
  return rep;
}

void write_measure_csv(const SpectralMeasure& mu, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("cannot open '" + path + "'");
  os << "lambda,weight\n";
  char buf[80];
  for (size_t k = 0; k < mu.lambdas.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mu.lambdas[k], mu.weights[k]);
    os << buf;
  }
}

void write_density_csv(const SmoothedDensity& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("cannot open '" + path + "'");
  os << "lambda,density\n";
  char buf[80];
  for (int i = 0; i < d.grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", d.grid[i], d.values[i]);
    os << buf;
  }
}

}  // namespace speclab
