#pragma once

#include "speclab/grid.hpp"

namespace speclab {

enum class CountMethod { sturm, inertia, dense };
const char* to_string(CountMethod m);

/// N(lambda, A): number of eigenvalues strictly below lambda, with the method that
/// produced it. If the query point sat on an eigenvalue (pivot breakdown), it was
/// shifted by +1e-9*||H|| and the shift is recorded.
struct CountCertificate {
  double lambda_requested = 0;
  double lambda_used = 0;
  int count = 0;
  CountMethod method = CountMethod::dense;
  bool perturbed = false;
};

CountCertificate count_below(const DiscreteOperator& op, double lambda);

/// All eigenvalues below tau with eigenvectors, completeness certified against
/// count_below. Eigenvectors are embedded on the full grid (zeros off the
/// operator's node set) and normalized in plain l2.
struct EigenResult {
  std::vector<double> lambdas;     // ascending
  std::vector<Field> vectors;
  std::vector<double> residuals;   // ||H psi - lambda psi||_2
  double threshold = 0;
  double op_norm = 0;
  int count() const { return static_cast<int>(lambdas.size()); }
};

EigenResult eigs_below(const DiscreteOperator& op, double tau);

/// sum |lambda_n|^p over the negative eigenvalues; requires threshold 0.
double neg_sum(const EigenResult& res, double p);

struct GroundState {
  double lambda = 0;
  Field psi;                // sign-fixed so that sum(psi) > 0
  double gap = 0;           // distance to the next eigenvalue (when known)
  bool degenerate = false;  // gap below 1e-10*||H||
};

GroundState ground_state(const DiscreteOperator& op);

/// EigenResult dump: CSV `k,lambda,residual`.
void write_eigenresult_csv(const EigenResult& res, const std::string& path);

// ---- low-level counters, exposed for oracle tests ----

/// Sturm-sequence count for a symmetric tridiagonal matrix.
int sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double lambda);

/// Inertia count via sparse LDLT of (A - lambda I). ok=false on factorization
/// breakdown (near-singular pivot).
int inertia_count(const Eigen::SparseMatrix<double>& A, double lambda, bool& ok);

/// Dense eigensolve count (the fallback oracle).
int dense_count(const Eigen::SparseMatrix<double>& A, double lambda);

/// Extract the tridiagonal bands of a 1D/radial stencil operator.
void tridiagonal_bands(const Eigen::SparseMatrix<double>& A, Eigen::VectorXd& diag,
                       Eigen::VectorXd& off);

}  // namespace speclab
