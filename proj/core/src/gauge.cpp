#include "speclab/gauge.hpp"

#include "json.hpp"
#include "speclab/spectra.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace speclab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("speclab: " + msg); }
[[noreturn]] void hard_error(const std::string& msg) { throw std::runtime_error("speclab: " + msg); }

std::vector<int> stencil_neighbors(const DomainSpec& spec, int p) {
  std::vector<int> nb;
  if (spec.kind == DomainKind::rectangle) {
    const int n = spec.n, ix = p % n, iy = p / n;
    if (ix > 0) nb.push_back(p - 1);
    if (ix + 1 < n) nb.push_back(p + 1);
    if (iy > 0) nb.push_back(p - n);
    if (iy + 1 < n) nb.push_back(p + n);
  } else {
    if (p > 0) nb.push_back(p - 1);
    if (p + 1 < spec.n) nb.push_back(p + 1);
  }
  return nb;
}

}  // namespace

VectorField VectorField::zero(const DomainSpec& spec) {
  VectorField v;
  v.domain = spec;
  const int comps = spec.kind == DomainKind::rectangle ? 2 : 1;
  for (int c = 0; c < comps; ++c)
    v.comps.push_back(Eigen::VectorXd::Zero(spec.total_nodes()));
  return v;
}

double VectorField::abs_sq(int node) const {
  double s = 0.0;
  for (const auto& c : comps) s += c[node] * c[node];
  return s;
}

Field positive_solution(const DiscreteOperator& Hplus, double gamma2, const Window& window) {
  if (Hplus.restricted()) fail("positive_solution expects a full-domain operator");
  const DomainSpec& spec = Hplus.domain;
  auto wmask = window.mask(spec);
  std::vector<int> wnodes;
  for (int p = 0; p < spec.total_nodes(); ++p)
    if (wmask[p]) wnodes.push_back(p);
  if (wnodes.empty()) fail("positive_solution: empty window");

  // rim nodes carry the boundary value 1; interior nodes are unknowns
  std::vector<char> interior = wmask;
  for (int p : wnodes) {
    bool rim = false;
    for (int q : stencil_neighbors(spec, p))
      if (!wmask[q]) rim = true;
    if (stencil_neighbors(spec, p).size() < (spec.kind == DomainKind::rectangle ? 4u : 2u))
      rim = true;  // touches the domain wall: treat as layer rim as well
    if (rim) interior[p] = 0;
  }
  std::vector<int> inodes;
  for (int p = 0; p < spec.total_nodes(); ++p)
    if (interior[p]) inodes.push_back(p);
  if (inodes.empty()) fail("positive_solution: window has no interior nodes");

  auto sub = restrict_operator(Hplus, inodes);
  if (count_below(sub, -gamma2).count != 0)
    hard_error("positive_solution precondition failed: H_+ + gamma^2 is not positive on the window");

  Eigen::SparseMatrix<double> M = sub.matrix;
  for (int i = 0; i < M.rows(); ++i) M.coeffRef(i, i) += gamma2;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(M);
  if (llt.info() != Eigen::Success)
    hard_error("positive_solution: factorization failed (positivity margin too thin)");

  // rhs from the rim values: the stencil couples interior nodes to rim nodes
  std::vector<int> where(spec.total_nodes(), -1);
  for (size_t k = 0; k < inodes.size(); ++k) where[inodes[k]] = static_cast<int>(k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(inodes.size()));
  for (int k = 0; k < Hplus.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Hplus.matrix, k); it; ++it) {
      if (it.row() == it.col()) continue;
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (where[r] >= 0 && wmask[c] && !interior[c]) rhs[where[r]] -= it.value() * 1.0;
    }
  Eigen::VectorXd u_int = llt.solve(rhs);

  Field u = make_field(spec);
  for (int p : wnodes) u.values[p] = 1.0;  // rim
  for (size_t k = 0; k < inodes.size(); ++k) u.values[inodes[k]] = u_int[k];

  double umin = 1.0;
  int argmin = wnodes[0];
  for (int p : wnodes)
    if (u.values[p] < umin) {
      umin = u.values[p];
      argmin = p;
    }
  if (!(umin > 0)) {
    hard_error("positive_solution: nonpositive value " + std::to_string(umin) + " at node " +
               std::to_string(argmin));
  }
  return u;
}

VectorField vector_potential(const Field& u, const Window& window) {
  const DomainSpec& spec = u.domain;
  auto wmask = window.mask(spec);
  VectorField A = VectorField::zero(spec);

  // centered differences of log u: the same field grad(u)/u, exact for pure
  // exponentials, which keeps the constants tame on steep seed windows
  auto axis_deriv = [&](int axis) {
    const AxisGeom g = axis_geom(spec, axis);
    const int stride = axis == 0 ? 1 : spec.n;
    for (int p = 0; p < spec.total_nodes(); ++p) {
      if (!wmask[p]) continue;
      if (!(u.values[p] > 0)) fail("vector_potential: u must be positive on the window");
      const int lo = p - stride, hi = p + stride;
      const int coord = axis == 0 ? (spec.kind == DomainKind::rectangle ? p % spec.n : p)
                                  : p / spec.n;
      const bool has_lo = coord > 0 && wmask[lo];
      const bool has_hi = coord + 1 < spec.n && wmask[hi];
      auto lg = [&](int q) { return std::log(u.values[q]); };
      double dlog;
      if (has_lo && has_hi) dlog = (lg(hi) - lg(lo)) / (2 * g.h);
      else if (has_hi) dlog = (lg(hi) - lg(p)) / g.h;
      else if (has_lo) dlog = (lg(p) - lg(lo)) / g.h;
      else dlog = 0.0;
      A.comps[axis][p] = dlog;
    }
  };
  axis_deriv(0);
  if (spec.kind == DomainKind::rectangle) axis_deriv(1);
  return A;
}

namespace {

// centered divergence of A at window-interior nodes; nodes too close to the rim
// are skipped by the caller
double divergence_at(const VectorField& A, const DomainSpec& spec, int p) {
  double div = 0.0;
  const AxisGeom gx = axis_geom(spec, 0);
  const int n = spec.n;
  if (spec.kind == DomainKind::rectangle) {
    const AxisGeom gy = axis_geom(spec, 1);
    div += (A.comps[0][p + 1] - A.comps[0][p - 1]) / (2 * gx.h);
    div += (A.comps[1][p + n] - A.comps[1][p - n]) / (2 * gy.h);
  } else {
    div += (A.comps[0][p + 1] - A.comps[0][p - 1]) / (2 * gx.h);
  }
  return div;
}

// nodes at graph distance >= depth from the window rim (and the domain wall)
std::vector<char> deep_interior(const DomainSpec& spec, const std::vector<char>& wmask, int depth) {
  std::vector<char> cur = wmask;
  for (int d = 0; d < depth; ++d) {
    std::vector<char> next = cur;
    for (int p = 0; p < spec.total_nodes(); ++p) {
      if (!cur[p]) continue;
      const auto nb = stencil_neighbors(spec, p);
      if (nb.size() < (spec.kind == DomainKind::rectangle ? 4u : 2u)) {
        next[p] = 0;
        continue;
      }
      for (int q : nb)
        if (!cur[q]) next[p] = 0;
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace

double gauge_residual(const DiscreteOperator& Hplus, double gamma2, const VectorField& A,
                      const Window& window) {
  const DomainSpec& spec = Hplus.domain;
  auto inner = deep_interior(spec, window.mask(spec), 2);
  double worst = 0.0;
  for (int p = 0; p < spec.total_nodes(); ++p) {
    if (!inner[p]) continue;
    const double lhs = Hplus.diag_pot[p] + gamma2;
    const double rhs = divergence_at(A, spec, p) + A.abs_sq(p);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

BoundReport l3_check(const VectorField& A, double gamma, const Field& phi, double C) {
  if (!A.domain.same_grid(phi.domain)) fail("l3_check: grids differ");
  const double vol = plain_cell_volume(phi.domain);
  double lhs = 0.0, mass = 0.0;
  for (int p = 0; p < phi.size(); ++p) {
    lhs += phi.values[p] * phi.values[p] * A.abs_sq(p) * vol;
    mass += phi.values[p] * phi.values[p] * vol;
  }
  const double energy = plain_edge_energy(phi, true);

  BoundReport r;
  r.bound_id = "l3";
  r.inputs_digest = field_digest(phi);
  r.lhs = lhs;
  r.rhs = C * (gamma * gamma * mass + energy);
  r.constant_used = C;
  r.holds = r.lhs <= r.rhs;
  const double base = gamma * gamma * mass + energy;
  r.extras = {{"gamma", gamma}, {"phi_mass", mass}, {"phi_energy", energy},
              {"observed_c", base > 0 ? lhs / base : 0.0}};
  r.finish();
  return r;
}

WindowGauge window_gauge(const DiscreteOperator& Hplus, double gamma2, const Window& window) {
  WindowGauge g;
  g.gamma2 = gamma2;
  g.u = positive_solution(Hplus, gamma2, window);
  g.A = vector_potential(g.u, window);
  g.residual = gauge_residual(Hplus, gamma2, g.A, window);
  return g;
}

GaugeDecomposition assemble_global(const Covering& cov, const PartitionOfUnity& pou,
                                   const std::vector<WindowGauge>& layer_gauges,
                                   const std::vector<WindowGauge>& gap_gauges,
                                   const DiscreteOperator& Hplus) {
  if (cov.square_mode) fail("assemble_global applies to radial coverings");
  const DomainSpec& spec = Hplus.domain;
  const int total = spec.total_nodes();
  if (pou.phi.size() != layer_gauges.size() || pou.psi.size() != gap_gauges.size())
    fail("assemble_global: partition and gauges are misaligned");

  GaugeDecomposition out;
  out.A = VectorField::zero(spec);
  out.W = make_field(spec);
  Field cross = make_field(spec);  // -sum A_e grad f_e + sum f_e |A_e|^2 (later minus |A|^2)
  const AxisGeom g = axis_geom(spec, 0);

  auto cdiff = [&](const Eigen::VectorXd& v, int p) {
    if (p == 0) return (v[1] - v[0]) / g.h;
    if (p == total - 1) return (v[p] - v[p - 1]) / g.h;
    return (v[p + 1] - v[p - 1]) / (2 * g.h);
  };
  // A_e grad(f_e) is discretized as D[f_e A_e] - f_e Dw[A_e]: the D[f_e A_e]
  // terms cancel identically against the assembled divergence, and Dw respects
  // the window support (one-sided at the rim) so no zero-extension jump leaks
  // into the per-window identity
  auto accumulate = [&](const Field& f, const WindowGauge& wg, const Window& win) {
    Eigen::VectorXd prod = f.values.cwiseProduct(wg.A.comps[0]);
    auto wmask = win.mask(spec);
    auto dw = [&](int p) {
      const bool has_lo = p > 0 && wmask[p - 1];
      const bool has_hi = p + 1 < total && wmask[p + 1];
      const auto& a = wg.A.comps[0];
      if (has_lo && has_hi) return (a[p + 1] - a[p - 1]) / (2 * g.h);
      if (has_hi) return (a[p + 1] - a[p]) / g.h;
      if (has_lo) return (a[p] - a[p - 1]) / g.h;
      return 0.0;
    };
    for (int p = 0; p < total; ++p) {
      out.A.comps[0][p] += prod[p];
      out.W.values[p] -= wg.gamma2 * f.values[p];
      const double dwp = wmask[p] ? dw(p) : 0.0;
      cross.values[p] += -(cdiff(prod, p) - f.values[p] * dwp) + f.values[p] * wg.A.abs_sq(p);
    }
  };
  const Window whole{spec.a1, spec.b1, 0, 0, false};
  for (size_t n = 0; n < layer_gauges.size(); ++n) {
    accumulate(pou.phi[n], layer_gauges[n], cov.layers[n].window);
    out.window_residuals.push_back(layer_gauges[n].residual);
  }
  for (size_t m = 0; m < gap_gauges.size(); ++m) {
    accumulate(pou.psi[m], gap_gauges[m], cov.gaps.empty() ? whole : cov.gaps[m].extended);
    out.gap_residuals.push_back(gap_gauges[m].residual);
  }

  // V0 = W - sum A_e grad f_e - |A|^2 + sum f_e |A_e|^2
  out.V0 = make_field(spec);
  for (int p = 0; p < total; ++p)
    out.V0.values[p] = out.W.values[p] + cross.values[p] - out.A.abs_sq(p);

  // reconstruction residual against the operator's potential, away from the ends
  const double vol = plain_cell_volume(spec);
  const double cd = spec.kind == DomainKind::radial ? unit_sphere_area(spec.d) : 1.0;
  double worst = 0.0;
  for (int p = 2; p + 2 < total; ++p) {
    const double recon = out.V0.values[p] + divergence_at(out.A, spec, p) + out.A.abs_sq(p);
    worst = std::max(worst, std::abs(Hplus.diag_pot[p] - recon));
  }
  out.recon_residual = worst;

  double wn = 0.0, ct = 0.0;
  for (int p = 0; p < total; ++p) {
    wn += (std::abs(out.V0.values[p]) + out.A.abs_sq(p)) * vol;
    ct += std::abs(out.V0.values[p] - out.W.values[p]) * vol;  // |V - V1| = |V0 - W|
  }
  out.weighted_norm = cd * wn;
  out.cross_term = cd * ct;
  return out;
}

GaugeDecomposition gauge_pipeline(const DiscreteOperator& Hplus, const Covering& cov,
                                  const PartitionOfUnity& pou) {
  const double scale = std::max(Hplus.norm_inf(), 1.0);
  const double margin = std::max(2 * cov.tol, 1e-10 * scale);

  std::vector<WindowGauge> layer_gauges, gap_gauges;
  if (cov.trivial || cov.layers.empty()) {
    // one gap element covering the whole domain
    Window whole{Hplus.domain.a1, Hplus.domain.b1, 0, 0, false};
    auto strict = restrict_operator(Hplus, whole.mask(Hplus.domain));
    const double g2 = count_below(strict, 1e-12 * scale).count == 0 ? 0.0 : margin;
    gap_gauges.push_back(window_gauge(Hplus, g2, whole));
    return assemble_global(cov, pou, layer_gauges, gap_gauges, Hplus);
  }

  for (const auto& l : cov.layers) {
    const double g2 = cov.layers[l.parent].epsilon + margin;
    layer_gauges.push_back(window_gauge(Hplus, g2, l.window));
  }
  for (const auto& gl : cov.gaps) {
    auto strict = restrict_operator(Hplus, gl.extended.mask(Hplus.domain));
    const double g2 = count_below(strict, 1e-12 * scale).count == 0 ? 0.0 : margin;
    gap_gauges.push_back(window_gauge(Hplus, g2, gl.extended));
  }
  return assemble_global(cov, pou, layer_gauges, gap_gauges, Hplus);
}

void write_gauge_decomposition(const GaugeDecomposition& g, const std::string& dir_prefix) {
  write_field_csv(g.V0, dir_prefix + "v0.csv");
  write_field_csv(g.W, dir_prefix + "w.csv");
  Field amag = make_field(g.V0.domain);
  for (int p = 0; p < amag.size(); ++p) amag.values[p] = std::sqrt(g.A.abs_sq(p));
  write_field_csv(amag, dir_prefix + "a_magnitude.csv");

  nlohmann::ordered_json j;
  j["weighted_norm"] = g.weighted_norm;
  j["reconstruction_residual"] = g.recon_residual;
  j["cross_term"] = g.cross_term;
  j["window_residuals"] = g.window_residuals;
  j["gap_residuals"] = g.gap_residuals;
  std::ofstream os(dir_prefix + "gauge_manifest.json");
  os << j.dump(2) << "\n";
}

}  // namespace speclab
