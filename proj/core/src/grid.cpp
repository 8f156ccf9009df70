#include "speclab/grid.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace speclab {

namespace {

double bc_stretch(Bc bc) { return bc == Bc::dirichlet ? 1.0 : 0.5; }

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("speclab: " + msg); }

}  // namespace

const char* to_string(Bc bc) { return bc == Bc::dirichlet ? "dirichlet" : "neumann"; }

const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::interval: return "interval";
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::radial: return "radial";
  }
  return "?";
}

DomainSpec DomainSpec::interval(double a, double b, int n, Bc lo, Bc hi) {
  DomainSpec s;
  s.kind = DomainKind::interval;
  s.a1 = a; s.b1 = b; s.n = n;
  s.bc = {lo, hi, lo, hi};
  s.validate();
  return s;
}

DomainSpec DomainSpec::rectangle(double a1, double b1, double a2, double b2, int n, Bc bc_all) {
  DomainSpec s;
  s.kind = DomainKind::rectangle;
  s.a1 = a1; s.b1 = b1; s.a2 = a2; s.b2 = b2; s.n = n;
  s.d = 2;
  s.bc = {bc_all, bc_all, bc_all, bc_all};
  s.validate();
  return s;
}

DomainSpec DomainSpec::radial(double rmin, double rmax, int d, int n, Bc lo, Bc hi) {
  DomainSpec s;
  s.kind = DomainKind::radial;
  s.a1 = rmin; s.b1 = rmax; s.d = d; s.n = n;
  s.bc = {lo, hi, lo, hi};
  s.validate();
  return s;
}

void DomainSpec::validate() const {
  if (n < 3) fail("grid needs n >= 3 nodes per axis");
  if (!(a1 < b1)) fail("axis requires a < b");
  if (kind == DomainKind::rectangle && !(a2 < b2)) fail("axis requires a < b");
  if (kind == DomainKind::radial) {
    if (!(a1 > 0.0)) fail("radial domain requires r_min > 0");
    if (d < 1) fail("radial dimension must be positive");
  }
}

bool DomainSpec::same_grid(const DomainSpec& o) const {
  return kind == o.kind && a1 == o.a1 && b1 == o.b1 && a2 == o.a2 && b2 == o.b2 &&
         d == o.d && n == o.n && bc == o.bc;
}

double DomainSpec::volume() const {
  switch (kind) {
    case DomainKind::interval: return b1 - a1;
    case DomainKind::rectangle: return (b1 - a1) * (b2 - a2);
    case DomainKind::radial:
      return unit_sphere_area(d) * (std::pow(b1, d) - std::pow(a1, d)) / d;
  }
  return 0.0;
}

AxisGeom axis_geom(double a, double b, int n, Bc lo, Bc hi) {
  AxisGeom g;
  g.a = a; g.b = b; g.n = n; g.lo = lo; g.hi = hi;
  const double intervals = n - 1 + bc_stretch(lo) + bc_stretch(hi);
  g.h = (b - a) / intervals;
  g.x0 = a + bc_stretch(lo) * g.h;
  return g;
}

AxisGeom axis_geom(const DomainSpec& spec, int axis) {
  if (axis == 0) return axis_geom(spec.a1, spec.b1, spec.n, spec.bc[0], spec.bc[1]);
  if (spec.kind != DomainKind::rectangle) fail("axis 1 requested on a 1-axis domain");
  return axis_geom(spec.a2, spec.b2, spec.n, spec.bc[2], spec.bc[3]);
}

double AxisGeom::cell_lo(int i) const { return i == 0 ? a : node(i) - h / 2; }
double AxisGeom::cell_hi(int i) const { return i == n - 1 ? b : node(i) + h / 2; }

double unit_sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: return 2.0 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
  }
}

double radial_centrifugal_coefficient(int d) { return (d - 1) * (d - 3) / 4.0; }

Field make_field(const DomainSpec& spec) {
  spec.validate();
  Field f;
  f.domain = spec;
  const int total = spec.total_nodes();
  f.values = Eigen::VectorXd::Zero(total);
  f.weights.resize(total);
  if (spec.kind == DomainKind::rectangle) {
    const AxisGeom gx = axis_geom(spec, 0), gy = axis_geom(spec, 1);
    for (int iy = 0; iy < spec.n; ++iy)
      for (int ix = 0; ix < spec.n; ++ix)
        f.weights[iy * spec.n + ix] = gx.weight(ix) * gy.weight(iy);
  } else if (spec.kind == DomainKind::radial) {
    const AxisGeom g = axis_geom(spec, 0);
    const double cd = unit_sphere_area(spec.d);
    for (int i = 0; i < spec.n; ++i) {
      // exact volume of the owned shell, so constants integrate exactly
      f.weights[i] = cd * (std::pow(g.cell_hi(i), spec.d) - std::pow(g.cell_lo(i), spec.d)) / spec.d;
    }
  } else {
    const AxisGeom g = axis_geom(spec, 0);
    for (int i = 0; i < spec.n; ++i) f.weights[i] = g.weight(i);
  }
  return f;
}

std::array<double, 2> node_coords(const DomainSpec& spec, int p) {
  if (spec.kind == DomainKind::rectangle) {
    const AxisGeom gx = axis_geom(spec, 0), gy = axis_geom(spec, 1);
    return {gx.node(p % spec.n), gy.node(p / spec.n)};
  }
  return {axis_geom(spec, 0).node(p), 0.0};
}

double node_abs(const DomainSpec& spec, int p) {
  const auto xy = node_coords(spec, p);
  if (spec.kind == DomainKind::rectangle) return std::hypot(xy[0], xy[1]);
  return std::abs(xy[0]);
}

Field field_from_values(const DomainSpec& spec, Eigen::VectorXd v) {
  Field f = make_field(spec);
  if (v.size() != f.values.size()) fail("field_from_values: size mismatch");
  f.values = std::move(v);
  return f;
}

Field operator+(const Field& f, const Field& g) {
  if (!f.domain.same_grid(g.domain)) fail("field +: grids differ");
  return field_from_values(f.domain, f.values + g.values);
}

Field operator-(const Field& f, const Field& g) {
  if (!f.domain.same_grid(g.domain)) fail("field -: grids differ");
  return field_from_values(f.domain, f.values - g.values);
}

Field operator*(double s, const Field& f) { return field_from_values(f.domain, s * f.values); }

double DiscreteOperator::norm_inf() const {
  double best = 0.0;
  for (int k = 0; k < matrix.outerSize(); ++k) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it)
      row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

double DiscreteOperator::gershgorin_lower() const {
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k < matrix.outerSize(); ++k) {
    double diag = 0.0, off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      if (it.row() == it.col()) diag = it.value();
      else off += std::abs(it.value());
    }
    lo = std::min(lo, diag - off);
  }
  return lo;
}

DiscreteOperator build_operator(const DomainSpec& spec, const Field& V, double sign,
                                std::optional<double> centrifugal, double shift) {
  spec.validate();
  if (!V.domain.same_grid(spec)) fail("build_operator: potential sampled on a different grid");
  if (centrifugal && spec.kind != DomainKind::radial)
    fail("build_operator: centrifugal term requires a radial domain");
  if (!V.values.allFinite()) fail("build_operator: potential has non-finite values");

  DiscreteOperator op;
  op.domain = spec;
  op.sign = sign;
  op.shift = shift;
  op.centrifugal = centrifugal.value_or(0.0);
  op.v_values = V.values;
  op.tridiagonal = spec.kind != DomainKind::rectangle;

  const int total = spec.total_nodes();
  op.nodes.resize(total);
  for (int i = 0; i < total; ++i) op.nodes[i] = i;

  op.diag_pot.resize(total);
  for (int p = 0; p < total; ++p) {
    double dp = sign * V.values[p] + shift;
    if (op.centrifugal != 0.0) {
      const double r = node_abs(spec, p);
      dp += op.centrifugal / (r * r);
    }
    op.diag_pot[p] = dp;
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(total) * 5);
  auto add_axis = [&](const AxisGeom& g, int stride, int other_count, int other_stride) {
    const double ih2 = 1.0 / (g.h * g.h);
    for (int o = 0; o < other_count; ++o) {
      for (int i = 0; i < g.n; ++i) {
        const int p = o * other_stride + i * stride;
        double diag = 2.0 * ih2;
        if (i == 0 && g.lo == Bc::neumann) diag -= ih2;
        if (i == g.n - 1 && g.hi == Bc::neumann) diag -= ih2;
        trip.emplace_back(p, p, diag);
        if (i + 1 < g.n) {
          trip.emplace_back(p, p + stride, -ih2);
          trip.emplace_back(p + stride, p, -ih2);
        }
      }
    }
  };
  if (spec.kind == DomainKind::rectangle) {
    add_axis(axis_geom(spec, 0), 1, spec.n, spec.n);
    add_axis(axis_geom(spec, 1), spec.n, spec.n, 1);
  } else {
    add_axis(axis_geom(spec, 0), 1, 1, 0);
  }
  for (int p = 0; p < total; ++p) trip.emplace_back(p, p, op.diag_pot[p]);

  op.matrix.resize(total, total);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

DiscreteOperator restrict_operator(const DiscreteOperator& op, const std::vector<int>& kept_rows) {
  if (kept_rows.empty()) fail("restrict_operator: empty mask");
  const int m = static_cast<int>(kept_rows.size());
  std::vector<int> inv(op.dim(), -1);
  for (int k = 0; k < m; ++k) {
    if (kept_rows[k] < 0 || kept_rows[k] >= op.dim()) fail("restrict_operator: node out of range");
    if (k > 0 && kept_rows[k] <= kept_rows[k - 1]) fail("restrict_operator: mask must be increasing");
    inv[kept_rows[k]] = k;
  }
  DiscreteOperator out;
  out.domain = op.domain;
  out.sign = op.sign;
  out.shift = op.shift;
  out.centrifugal = op.centrifugal;
  out.tridiagonal = op.tridiagonal;
  out.nodes.resize(m);
  out.v_values.resize(m);
  out.diag_pot.resize(m);
  for (int k = 0; k < m; ++k) {
    out.nodes[k] = op.nodes[kept_rows[k]];
    out.v_values[k] = op.v_values[kept_rows[k]];
    out.diag_pot[k] = op.diag_pot[kept_rows[k]];
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < op.matrix.outerSize(); ++k) {
    if (inv[k] < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it) {
      if (inv[it.row()] >= 0) trip.emplace_back(inv[it.row()], inv[it.col()], it.value());
    }
  }
  out.matrix.resize(m, m);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.makeCompressed();
  return out;
}

DiscreteOperator restrict_operator(const DiscreteOperator& op, const std::vector<char>& mask) {
  if (static_cast<int>(mask.size()) != op.dim()) fail("restrict_operator: mask size mismatch");
  std::vector<int> rows;
  for (int i = 0; i < op.dim(); ++i)
    if (mask[i]) rows.push_back(i);
  return restrict_operator(op, rows);
}

double integrate(const Field& f, double weight_exponent) {
  if (!f.values.allFinite()) fail("integrate: non-finite field");
  if (weight_exponent == 0.0) return f.values.dot(f.weights);
  double sum = 0.0;
  for (int p = 0; p < f.size(); ++p) {
    const double r = node_abs(f.domain, p);
    if (r == 0.0 && weight_exponent < 0.0) fail("integrate: weight singular at a grid node");
    sum += f.values[p] * std::pow(r, weight_exponent) * f.weights[p];
  }
  return sum;
}

double plain_cell_volume(const DomainSpec& spec) {
  double vol = axis_geom(spec, 0).h;
  if (spec.kind == DomainKind::rectangle) vol *= axis_geom(spec, 1).h;
  return vol;
}

namespace {

// Edge sum of (df)^2/h^2 * edge_volume. Dirichlet sides add the virtual edge to the
// vanishing boundary value; Neumann sides have no boundary edge (mirror ghost).
double edge_energy(const DomainSpec& spec, const Eigen::VectorXd& v, bool radial_surface) {
  double e = 0.0;
  if (spec.kind == DomainKind::rectangle) {
    const AxisGeom gx = axis_geom(spec, 0), gy = axis_geom(spec, 1);
    auto axis_sum = [&](const AxisGeom& g, const AxisGeom& gt, bool x_axis) {
      const double edge_vol = g.h * gt.h;
      double s = 0.0;
      for (int o = 0; o < spec.n; ++o) {
        auto at = [&](int i) { return x_axis ? v[o * spec.n + i] : v[i * spec.n + o]; };
        if (g.lo == Bc::dirichlet) s += at(0) * at(0) / (g.h * g.h) * edge_vol;
        for (int i = 0; i + 1 < g.n; ++i) {
          const double df = at(i + 1) - at(i);
          s += df * df / (g.h * g.h) * edge_vol;
        }
        if (g.hi == Bc::dirichlet) s += at(g.n - 1) * at(g.n - 1) / (g.h * g.h) * edge_vol;
      }
      return s;
    };
    e = axis_sum(gx, gy, true) + axis_sum(gy, gx, false);
  } else {
    const AxisGeom g = axis_geom(spec, 0);
    const double cd = radial_surface ? unit_sphere_area(spec.d) : 1.0;
    const int dm1 = radial_surface ? spec.d - 1 : 0;
    auto surf = [&](double rmid) { return cd * std::pow(std::abs(rmid), dm1); };
    if (g.lo == Bc::dirichlet) {
      const double rmid = 0.5 * (g.a + g.node(0));
      e += v[0] * v[0] / g.h * surf(rmid);
    }
    for (int i = 0; i + 1 < g.n; ++i) {
      const double df = v[i + 1] - v[i];
      const double rmid = 0.5 * (g.node(i) + g.node(i + 1));
      e += df * df / g.h * surf(rmid);
    }
    if (g.hi == Bc::dirichlet) {
      const double rmid = 0.5 * (g.node(g.n - 1) + g.b);
      e += v[g.n - 1] * v[g.n - 1] / g.h * surf(rmid);
    }
  }
  return e;
}

}  // namespace

double dirichlet_energy(const Field& f) {
  return edge_energy(f.domain, f.values, f.domain.kind == DomainKind::radial);
}

double plain_edge_energy(const Field& f, bool boundary_edges) {
  const DomainSpec& spec = f.domain;
  const Eigen::VectorXd& v = f.values;
  const double vol = plain_cell_volume(spec);
  double e = 0.0;
  auto axis_sum = [&](const AxisGeom& g, bool x_axis) {
    const int other = spec.kind == DomainKind::rectangle ? spec.n : 1;
    for (int o = 0; o < other; ++o) {
      auto at = [&](int i) {
        if (spec.kind != DomainKind::rectangle) return v[i];
        return x_axis ? v[o * spec.n + i] : v[i * spec.n + o];
      };
      if (boundary_edges && g.lo == Bc::dirichlet) e += at(0) * at(0) / (g.h * g.h) * vol;
      for (int i = 0; i + 1 < g.n; ++i) {
        const double df = at(i + 1) - at(i);
        e += df * df / (g.h * g.h) * vol;
      }
      if (boundary_edges && g.hi == Bc::dirichlet)
        e += at(g.n - 1) * at(g.n - 1) / (g.h * g.h) * vol;
    }
  };
  axis_sum(axis_geom(spec, 0), true);
  if (spec.kind == DomainKind::rectangle) axis_sum(axis_geom(spec, 1), false);
  return e;
}

double stencil_energy_form(const DiscreteOperator& op, const Eigen::VectorXd& f) {
  if (f.size() != op.dim()) fail("stencil_energy_form: size mismatch");
  const double quad = (op.matrix * f).dot(f) - op.diag_pot.cwiseProduct(f).dot(f);
  return plain_cell_volume(op.domain) * quad;
}

double diagonal_form(const DiscreteOperator& op, const Eigen::VectorXd& f) {
  if (f.size() != op.dim()) fail("diagonal_form: size mismatch");
  return plain_cell_volume(op.domain) * op.diag_pot.cwiseProduct(f).dot(f);
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string domain_header(const DomainSpec& spec) {
  std::ostringstream os;
  os << "# domain=" << to_string(spec.kind) << "(";
  if (spec.kind == DomainKind::rectangle)
    os << fmt17(spec.a1) << "," << fmt17(spec.b1) << "," << fmt17(spec.a2) << "," << fmt17(spec.b2);
  else if (spec.kind == DomainKind::radial)
    os << fmt17(spec.a1) << "," << fmt17(spec.b1) << "," << spec.d;
  else
    os << fmt17(spec.a1) << "," << fmt17(spec.b1);
  os << ") n=" << spec.n << " bc=" << to_string(spec.bc[0]) << "," << to_string(spec.bc[1]);
  if (spec.kind == DomainKind::rectangle)
    os << "," << to_string(spec.bc[2]) << "," << to_string(spec.bc[3]);
  return os.str();
}

DomainSpec parse_domain_header(const std::string& line) {
  DomainSpec spec;
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(std::string("field header: expected ") + what + " in '" + line + "'");
  };
  const auto dpos = line.find("domain=");
  need(dpos != std::string::npos, "domain=");
  const auto open = line.find('(', dpos);
  const auto close = line.find(')', dpos);
  need(open != std::string::npos && close != std::string::npos, "(...)");
  const std::string kind = line.substr(dpos + 7, open - dpos - 7);
  std::string args = line.substr(open + 1, close - open - 1);
  std::vector<std::string> parts;
  {
    std::stringstream ss(args);
    std::string tok;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
  }
  const auto npos_ = line.find("n=", close);
  need(npos_ != std::string::npos, "n=");
  spec.n = std::atoi(line.c_str() + npos_ + 2);
  const auto bpos = line.find("bc=", close);
  need(bpos != std::string::npos, "bc=");
  std::vector<std::string> bcs;
  {
    std::stringstream ss(line.substr(bpos + 3));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r')) tok.pop_back();
      bcs.push_back(tok);
    }
  }
  auto parse_bc = [&](const std::string& s) {
    if (s == "dirichlet") return Bc::dirichlet;
    if (s == "neumann") return Bc::neumann;
    fail("field header: unknown bc '" + s + "'");
  };
  if (kind == "interval") {
    need(parts.size() == 2 && bcs.size() >= 2, "interval(a,b)");
    spec = DomainSpec::interval(std::atof(parts[0].c_str()), std::atof(parts[1].c_str()), spec.n,
                                parse_bc(bcs[0]), parse_bc(bcs[1]));
  } else if (kind == "radial") {
    need(parts.size() == 3 && bcs.size() >= 2, "radial(rmin,rmax,d)");
    spec = DomainSpec::radial(std::atof(parts[0].c_str()), std::atof(parts[1].c_str()),
                              std::atoi(parts[2].c_str()), spec.n, parse_bc(bcs[0]), parse_bc(bcs[1]));
  } else if (kind == "rectangle") {
    need(parts.size() == 4 && bcs.size() >= 4, "rectangle(a1,b1,a2,b2)");
    spec = DomainSpec::rectangle(std::atof(parts[0].c_str()), std::atof(parts[1].c_str()),
                                 std::atof(parts[2].c_str()), std::atof(parts[3].c_str()), spec.n,
                                 parse_bc(bcs[0]));
    spec.bc = {parse_bc(bcs[0]), parse_bc(bcs[1]), parse_bc(bcs[2]), parse_bc(bcs[3])};
  } else {
    fail("field header: unknown domain kind '" + kind + "'");
  }
  return spec;
}

void write_field_csv(const Field& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("cannot open '" + path + "' for writing");
  os << domain_header(f.domain) << "\n";
  const bool two_d = f.domain.kind == DomainKind::rectangle;
  os << (two_d ? "index,x,y,value" : "index,x,value") << "\n";
  for (int p = 0; p < f.size(); ++p) {
    const auto xy = node_coords(f.domain, p);
    os << p << "," << fmt17(xy[0]);
    if (two_d) os << "," << fmt17(xy[1]);
    os << "," << fmt17(f.values[p]) << "\n";
  }
}

Field read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) fail("empty field file");
  Field f = make_field(parse_domain_header(line));
  std::getline(is, line);  // column header
  int count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    const long idx = std::strtol(s, &end, 10);
    if (idx < 0 || idx >= f.size()) fail("field row index out of range");
    double value = 0.0;
    const char* p = end;
    int fields = f.domain.kind == DomainKind::rectangle ? 3 : 2;
    for (int k = 0; k < fields; ++k) {
      if (*p != ',') fail("malformed field row: '" + line + "'");
      value = std::strtod(p + 1, &end);
      p = end;
    }
    f.values[idx] = value;
    ++count;
  }
  if (count != f.size()) fail("field file row count mismatch");
  return f;
}

std::string field_digest(const Field& f) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  const std::string hdr = domain_header(f.domain);
  mix(hdr.data(), hdr.size());
  mix(f.values.data(), sizeof(double) * f.values.size());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

}  // namespace speclab
