#pragma once

#include "speclab/bounds.hpp"
#include "speclab/gauge.hpp"
#include "speclab/grid.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

/// Atomic spectral measure mu(d lambda) = sum w_k delta_{lambda_k}, w_k = |<f, e_k>|^2.
struct SpectralMeasure {
  std::vector<double> lambdas;  // sorted ascending
  std::vector<double> weights;  // nonnegative, sum = ||f||^2
  double total_mass = 0;
};

/// Full-decomposition spectral measure of op for the vector f (normalized
/// internally). In annulus mode f must be supported in the layer 1 < r < 2.
SpectralMeasure spectral_measure(const DiscreteOperator& op, const Field& f,
                                 bool annulus_mode = false);

/// The Section-5 test vector: a normalized smooth bump supported in 1 < r < 2.
Field spectral_test_function(const DomainSpec& domain);

/// Gaussian-kernel smoothing of the atomic measure on a uniform lambda grid.
struct SmoothedDensity {
  double bandwidth = 0;
  Eigen::VectorXd grid;    // [0, lambda_max]
  Eigen::VectorXd values;  // mu'(lambda) >= 0
};

SmoothedDensity smooth_density(const SpectralMeasure& mu, double bandwidth, double lambda_max,
                               int samples = 2001);

/// Continuous compactly supported bump on [a, b] subset (0, infinity).
struct TestFunctionSpec {
  double a = 0.5, b = 2.5;
  double height = 1.0;
  int order = 2;
  double operator()(double lambda) const;
};

struct EntropyReport {
  double value = 0;            // int log(mu'/phi) phi d lambda
  bool neg_infinity = false;   // mu' vanished somewhere on supp phi
  double bandwidth = 0;
  double budget = 0;           // -C (sums + sqrt||V||_inf + 1), filled by the caller
  double C_used = 0;
};

EntropyReport entropy(const SmoothedDensity& density, const TestFunctionSpec& phi);

/// -C (sum sqrt|lambda_n(V)| + sum sqrt|lambda_n(-V)| + sqrt(||V||_inf) + 1).
double entropy_budget(const EigenResult& plus, const EigenResult& minus, double v_inf, double C);

/// V_{n,eps} = [V0]_+ - chi_n [V0]_- + div A + (1-eps)^{-1} |A|^2, with its
/// negative count and the splitting certificate
/// N(V_{n,eps}) <= N(-eps^{-1} chi_n [V0]_-).
struct TruncationResult {
  Field V_trunc;
  int count = 0;
  BoundReport splitting;
};

TruncationResult truncate_potential(const Field& V0, const VectorField& A, double radius_n,
                                    double eps);

/// Exact bounded-Lipschitz (Dudley) distance between two atomic measures on R,
/// computed by dynamic programming over concave piecewise-linear value functions.
double bounded_lipschitz_distance(const SpectralMeasure& mu, const SpectralMeasure& nu);

struct SemicontinuityReport {
  std::vector<double> dbl;        // d_BL(mu_k, mu)
  std::vector<double> entropies;  // entropy of each family member
  double entropy_limit = 0;
  bool dbl_trend = false;         // nonincreasing (within slack) toward zero
  bool semicontinuity = false;    // entropy(mu) >= liminf entropy(mu_k) - slack
};

SemicontinuityReport semicontinuity_experiment(const std::vector<Field>& family,
                                               const Field& v_limit, const Field& f,
                                               const TestFunctionSpec& phi, double bandwidth,
                                               double slack);

void write_measure_csv(const SpectralMeasure& mu, const std::string& path);
void write_density_csv(const SmoothedDensity& d, const std::string& path);

}  // namespace speclab
