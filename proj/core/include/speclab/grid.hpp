#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace speclab {

enum class Bc { dirichlet, neumann };
enum class DomainKind { interval, rectangle, radial };

const char* to_string(Bc bc);
const char* to_string(DomainKind k);

/// Structured grid on an interval, a rectangle, or a radial shell {rmin<|x|<rmax} in R^d.
///
/// Node placement per axis [a,b] with boundary conditions (lo,hi):
///   h = (b-a)/(n-1+s(lo)+s(hi)),  s(dirichlet)=1, s(neumann)=1/2,
///   x_i = a + s(lo)*h + i*h.
/// Dirichlet sides keep the vanishing boundary point off the grid at distance h;
/// Neumann sides are cell-centered so mirror ghosts preserve symmetry.
struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  double a1 = 0.0, b1 = 1.0;  // first axis (or r-range for radial)
  double a2 = 0.0, b2 = 1.0;  // second axis (rectangle only)
  int d = 1;                  // ambient dimension (radial only)
  int n = 3;                  // nodes per axis
  std::array<Bc, 4> bc{Bc::dirichlet, Bc::dirichlet, Bc::dirichlet, Bc::dirichlet};

  static DomainSpec interval(double a, double b, int n,
                             Bc lo = Bc::dirichlet, Bc hi = Bc::dirichlet);
  static DomainSpec rectangle(double a1, double b1, double a2, double b2, int n,
                              Bc bc_all = Bc::dirichlet);
  static DomainSpec radial(double rmin, double rmax, int d, int n,
                           Bc lo = Bc::dirichlet, Bc hi = Bc::dirichlet);

  int axes() const { return kind == DomainKind::rectangle ? 2 : 1; }
  int total_nodes() const { return kind == DomainKind::rectangle ? n * n : n; }
  void validate() const;  // throws std::invalid_argument on bad parameters
  bool same_grid(const DomainSpec& o) const;
  double volume() const;  // length / area / shell volume c_d (b^d-a^d)/d
};

/// One axis of a grid: node positions and ownership-cell quadrature weights.
struct AxisGeom {
  double a, b, h, x0;
  int n;
  Bc lo, hi;
  double node(int i) const { return x0 + i * h; }
  double cell_lo(int i) const;  // owned cell [cell_lo, cell_hi], cells tile [a,b]
  double cell_hi(int i) const;
  double weight(int i) const { return cell_hi(i) - cell_lo(i); }
};

AxisGeom axis_geom(double a, double b, int n, Bc lo, Bc hi);
AxisGeom axis_geom(const DomainSpec& spec, int axis);

/// Area of the unit sphere S^{d-1} (c_1=2, c_2=2pi, c_3=4pi).
double unit_sphere_area(int d);

/// Real scalar function sampled on a grid, with quadrature weights whose sum
/// equals the domain volume exactly (radial weights carry c_d r^{d-1}).
struct Field {
  DomainSpec domain;
  Eigen::VectorXd values;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(values.size()); }
  double norm_inf() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

Field make_field(const DomainSpec& spec);  // zero values, weights from the grid

/// Physical coordinates of node p. 1D/radial: (x, 0); rectangle: (x, y),
/// node ordering row-major, p = iy*n + ix.
std::array<double, 2> node_coords(const DomainSpec& spec, int p);
double node_abs(const DomainSpec& spec, int p);  // |x| (r for radial)

// elementwise helpers
Field field_from_values(const DomainSpec& spec, Eigen::VectorXd v);
Field operator+(const Field& f, const Field& g);
Field operator-(const Field& f, const Field& g);
Field operator*(double s, const Field& f);

/// Symmetric finite-difference realization of -Delta + sign*V + shift + centrifugal/r^2.
/// 3-point (1D/radial) or 5-point (rectangle) stencil; Neumann via mirror ghosts.
/// `nodes` maps matrix rows to grid node ids (identity for a full-domain operator,
/// a subset after restrict_operator).
struct DiscreteOperator {
  DomainSpec domain;
  std::vector<int> nodes;
  Eigen::SparseMatrix<double> matrix;
  double sign = -1.0;
  double shift = 0.0;
  double centrifugal = 0.0;
  Eigen::VectorXd v_values;  // sampled V on `nodes` (unsigned, as passed)
  Eigen::VectorXd diag_pot;  // sign*V + shift + centrifugal/r^2 on `nodes`
  bool tridiagonal = false;

  int dim() const { return static_cast<int>(matrix.rows()); }
  bool restricted() const { return dim() != domain.total_nodes(); }
  double norm_inf() const;  // matrix infinity norm
  /// Gershgorin lower bound on the spectrum.
  double gershgorin_lower() const;
};

/// Standard half-line reduction coefficient alpha_d = (d-1)(d-3)/4.
double radial_centrifugal_coefficient(int d);

DiscreteOperator build_operator(const DomainSpec& spec, const Field& V, double sign,
                                std::optional<double> centrifugal = std::nullopt,
                                double shift = 0.0);

/// Dirichlet restriction to a node subset: principal submatrix on the kept nodes.
DiscreteOperator restrict_operator(const DiscreteOperator& op, const std::vector<int>& kept_nodes);
DiscreteOperator restrict_operator(const DiscreteOperator& op, const std::vector<char>& mask);

/// Sum f_i |x_i|^w weight_i. Exact for constants at w=0.
double integrate(const Field& f, double weight_exponent = 0.0);

/// Forward-difference gradient energy. On flat domains it equals the free-Laplacian
/// quadratic form times the plain cell volume, exactly; on radial domains it is the
/// physical energy c_d sum (df/dr)^2 r^{d-1} h of the radial profile.
double dirichlet_energy(const Field& f);

/// Plain per-node cell volume prod(h_axis), the volume element matching the stencil
/// quadratic form (no boundary stretching, no surface factor).
double plain_cell_volume(const DomainSpec& spec);

/// Edge-sum gradient energy with the plain volume element and no surface factor.
/// With boundary_edges, Dirichlet sides contribute the virtual edge to zero.
double plain_edge_energy(const Field& f, bool boundary_edges);

/// Quadratic-form pieces of an operator evaluated on a grid function supported
/// on the operator's nodes (plain-volume quadrature):
///   energy_form  = vol * f' L f     (free stencil part)
///   potential_form = vol * sum diag_i f_i^2  (sign*V + shift + centrifugal part)
double stencil_energy_form(const DiscreteOperator& op, const Eigen::VectorXd& f);
double diagonal_form(const DiscreteOperator& op, const Eigen::VectorXd& f);

// ---- Field CSV serialization (bit-exact round trip, 17 significant digits) ----
void write_field_csv(const Field& f, const std::string& path);
Field read_field_csv(const std::string& path);
std::string domain_header(const DomainSpec& spec);
DomainSpec parse_domain_header(const std::string& line);

/// FNV-1a digest of grid + values, for report provenance.
std::string field_digest(const Field& f);

}  // namespace speclab
