#pragma once

#include "speclab/grid.hpp"
#include "speclab/report.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

/// Piecewise-linear plateau cutoff: 1 on |t|<L, 0 on |t|>=3L, 3/2-|t|/(2L)
/// between. 2D windows use the tensor min over both axes.
struct CutoffProfile {
  double center1 = 0.0;
  double center2 = 0.0;
  double L = 1.0;
  bool two_d = false;

  double eval1(double t) const;                  // profile of one variable
  double operator()(double x, double y = 0.0) const;
  double grad_sq(double x, double y = 0.0) const;  // |grad phi|^2 of the profile
  Field sample_on(const DomainSpec& spec) const;
};

CutoffProfile cutoff_profile(double center, double L);
CutoffProfile cutoff_profile_2d(double cx, double cy, double L);

/// |LHS - RHS| of the localization identity
///   int(|grad(phi psi)|^2 + W |phi psi|^2) = int(|grad phi|^2 psi^2) + lambda int|phi psi|^2
/// evaluated with continuum-style quadratures; O(h) ||psi||^2 for an eigenpair.
double ims_residual(const DiscreteOperator& op, double lambda, const Field& psi,
                    const CutoffProfile& phi);

/// Same identity with the edge-product weighting psi_i psi_j, which is exact for
/// the stencil matrix in exact arithmetic (test oracle).
double ims_identity_gap(const DiscreteOperator& op, double lambda, const Field& psi,
                        const CutoffProfile& phi);

/// axis-aligned window: an r-interval, or a box for 2D squares
struct Window {
  double lo1 = 0, hi1 = 0;
  double lo2 = 0, hi2 = 0;
  bool two_d = false;

  double width() const { return hi1 - lo1; }
  bool contains(const DomainSpec& spec, int node) const;
  std::vector<char> mask(const DomainSpec& spec) const;
  bool intersects(const Window& o, double slack) const;
  double distance(const Window& o) const;  // 1D chain distance (radial mode)
};

enum class LocalizeMode { square, layer };

struct LocalizeResult {
  Window core;         // mass-maximizing core (halfwidth L_c)
  Window window;       // cutoff support window (halfwidth 3 L_c)
  double verified_eig; // bottom of the restriction to window ∩ S  (<= -gamma^2/2 + tol)
};

/// Find the window hosting the localized eigenvalue: the core center maximizes
/// the core-mass of psi over grid-node candidates, and the restricted operator
/// is certified to keep an eigenvalue <= -gamma^2/2 + 10h.
LocalizeResult localize(const DiscreteOperator& op_on_S, const Field& psi, double gamma,
                        LocalizeMode mode);

struct CoverLayer {
  Window window;           // Omega_n, after all enlargements
  Window core;             // omega_n
  std::vector<int> core_nodes;
  double epsilon = 0;      // eps_n
  int parent = 0;          // j(n)
  double core_eig = 0;     // certified eigenvalue on the core (<= -eps/2 + 10h)
  int host_sign = 0;       // +1 if hosted by H_+, -1 if by H_-, 0 for the seed
};

struct GapLayer {
  Window window;    // Lambda_m after trimming
  Window extended;  // Lambda_m with its eps^{-1/2} margins (verification region)
  int nb1 = -1, nb2 = -1;
};

struct Covering {
  std::vector<CoverLayer> layers;
  std::vector<GapLayer> gaps;
  double tol = 0;
  bool square_mode = false;
  bool trivial = false;  // H_pm >= -tol on the whole domain, nothing to cover
};

/// Greedy covering of the negative spectra of H_+ and H_- (Lemmas 2.5 / 4.4 / 4.5).
/// Radial domains build spherical-layer chains seeded by Omega_0=[rmin,2],
/// omega_0=[rmin,1]; 2D domains build square coverings without gap layers.
Covering greedy_cover(const DiscreteOperator& Hp, const DiscreteOperator& Hm, double tol);

struct CoveringChecks {
  std::vector<BoundReport> reports;
  bool all_hold = true;
};

/// Replays every covering postcondition by eigensolve and geometry:
/// complement nonnegative, per-window lower bounds, gap positivity, monotone
/// levels, disjoint cores, parent distances, coverage.
CoveringChecks verify_covering(const Covering& cov, const DiscreteOperator& Hp,
                               const DiscreteOperator& Hm);

std::string covering_to_json(const Covering& cov);
Covering covering_from_json(const std::string& text);

/// Recompute the core node sets from serialized geometry (radial cores are their
/// own intervals; square cores are the window minus all earlier windows).
void rebuild_core_nodes(Covering& cov, const DomainSpec& spec);

struct PartitionOfUnity {
  std::vector<Field> phi;  // one per layer, aligned with covering.layers
  std::vector<Field> psi;  // one per gap layer
  double weighted_gradient_sum = 0;  // sum int (|phi'|^2+|psi'|^2) |x|^{1-d} dx
  double eps_sqrt_sum = 0;           // sum_{n>=1} eps_n^{1/2}
  double empirical_c = 0;            // ratio of the two
};

/// Piecewise-linear partition subordinate to a radial covering, with ramps
/// spanning exactly the pairwise intersections (slopes inverse to their widths)
/// so that sum phi + sum psi = 1 at every node.
PartitionOfUnity build_partition(const Covering& cov, const DomainSpec& domain);

struct GnyChainReport {
  int N = 0;
  Covering covering;
  std::vector<BoundReport> chain;
  bool all_hold = true;
};

/// The full cutoff-chain certificate for a nonnegative 2D potential:
/// per-step test-function inequalities, the running-maximum gradient budget
/// 8n, the accumulated (6^4+4(N+1))N bound, and the large-R tail 8(1+N).
GnyChainReport gny_chain_certificate(const Field& V, double cover_tol, double rel_slack = 0.02);

}  // namespace speclab
