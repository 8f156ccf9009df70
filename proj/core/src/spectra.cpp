#include "speclab/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace speclab {

namespace {

constexpr int kDenseCutoff = 2000;       // below this, dense eigensolves are cheap
constexpr int kDenseFallbackCap = 6000;  // largest n we allow the dense fallback

[[noreturn]] void solver_fail(const std::string& msg) {
  throw std::runtime_error("speclab eigensolver: " + msg);
}

double deterministic_entry(uint64_t i) {
  uint64_t z = (i + 1) * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return (z >> 11) * 0x1.0p-53 - 0.5;
}

Eigen::VectorXd deterministic_unit(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = deterministic_entry(i);
  v.normalize();
  return v;
}

double gershgorin_upper(const Eigen::SparseMatrix<double>& A) {
  double up = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < A.outerSize(); ++k) {
    double diag = 0.0, off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (it.row() == it.col()) diag = it.value();
      else off += std::abs(it.value());
    }
    up = std::max(up, diag + off);
  }
  return up;
}

double gershgorin_lower(const Eigen::SparseMatrix<double>& A) {
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k < A.outerSize(); ++k) {
    double diag = 0.0, off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (it.row() == it.col()) diag = it.value();
      else off += std::abs(it.value());
    }
    lo = std::min(lo, diag - off);
  }
  return lo;
}

double matrix_inf_norm(const Eigen::SparseMatrix<double>& A) {
  double best = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

Eigen::SparseMatrix<double> shifted(const Eigen::SparseMatrix<double>& A, double s) {
  Eigen::SparseMatrix<double> B = A;
  for (int i = 0; i < B.rows(); ++i) B.coeffRef(i, i) -= s;
  return B;
}

Field embed_vector(const DiscreteOperator& op, const Eigen::VectorXd& x) {
  Field f = make_field(op.domain);
  for (int i = 0; i < op.dim(); ++i) f.values[op.nodes[i]] = x[i];
  return f;
}

// ---------------------------------------------------------------------------
// tridiagonal machinery
// ---------------------------------------------------------------------------

// LU of (T - shift) with partial pivoting, LAPACK dgttrf style.
struct TriLU {
  Eigen::VectorXd dl, d, du, du2;
  std::vector<char> swap;
  int n = 0;

  void factor(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double shift) {
    n = static_cast<int>(diag.size());
    d = diag.array() - shift;
    dl = off;
    du = off;
    du2 = Eigen::VectorXd::Zero(std::max(0, n - 2));
    swap.assign(std::max(0, n - 1), 0);
    for (int i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] == 0.0) d[i] = std::numeric_limits<double>::min();
        const double fact = dl[i] / d[i];
        dl[i] = fact;
        d[i + 1] -= fact * du[i];
        if (i + 2 < n) du2[i] = 0.0;
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = temp - fact * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        swap[i] = 1;
      }
    }
    if (d[n - 1] == 0.0) d[n - 1] = std::numeric_limits<double>::min();
  }

  void solve(Eigen::VectorXd& b) const {
    for (int i = 0; i + 1 < n; ++i) {
      if (!swap[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl[i] * b[i + 1];
      }
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (int i = n - 3; i >= 0; --i)
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  }
};

Eigen::VectorXd tridiag_apply(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                              const Eigen::VectorXd& x) {
  const int n = static_cast<int>(diag.size());
  Eigen::VectorXd y = diag.cwiseProduct(x);
  for (int i = 0; i + 1 < n; ++i) {
    y[i] += off[i] * x[i + 1];
    y[i + 1] += off[i] * x[i];
  }
  return y;
}

// bisection for the j-th smallest eigenvalue (1-based), given a bracket
double bisect_kth(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, int j, double lo,
                  double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(diag, off, mid) >= j) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

struct TriPairs {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> vectors;
};

TriPairs tridiag_smallest(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, int k,
                          double scale) {
  const int n = static_cast<int>(diag.size());
  TriPairs out;
  const double glo = [&] {
    double lo = diag[0] - (n > 1 ? std::abs(off[0]) : 0.0);
    for (int i = 1; i < n; ++i) {
      double s = std::abs(off[i - 1]) + (i + 1 < n ? std::abs(off[i]) : 0.0);
      lo = std::min(lo, diag[i] - s);
    }
    return lo;
  }();
  const double ghi = [&] {
    double hi = diag[0] + (n > 1 ? std::abs(off[0]) : 0.0);
    for (int i = 1; i < n; ++i) {
      double s = std::abs(off[i - 1]) + (i + 1 < n ? std::abs(off[i]) : 0.0);
      hi = std::max(hi, diag[i] + s);
    }
    return hi;
  }();

  double prev = glo - 1e-12 * scale;
  for (int j = 1; j <= k; ++j) {
    const double lam = bisect_kth(diag, off, j, prev, ghi + 1e-12 * scale);
    out.lambdas.push_back(lam);
    prev = lam;
  }

  // inverse iteration per eigenvalue, orthogonalized within clusters
  const double cluster_tol = std::max(1e-7 * scale, 1e-12);
  for (int j = 0; j < k; ++j) {
    TriLU lu;
    lu.factor(diag, off, out.lambdas[j] + 1e-12 * scale);
    Eigen::VectorXd x = deterministic_unit(n);
    for (int it = 0; it < 6; ++it) {
      lu.solve(x);
      for (int i = 0; i < j; ++i) {
        if (std::abs(out.lambdas[i] - out.lambdas[j]) < cluster_tol)
          x -= out.vectors[i].dot(x) * out.vectors[i];
      }
      const double nx = x.norm();
      if (!(nx > 0) || !x.allFinite()) {
        x = deterministic_unit(n);
        continue;
      }
      x /= nx;
      const double res = (tridiag_apply(diag, off, x) - out.lambdas[j] * x).norm();
      if (res <= 1e-10 * scale && it >= 1) break;
    }
    // Rayleigh polish of the eigenvalue
    out.lambdas[j] = x.dot(tridiag_apply(diag, off, x));
    out.vectors.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// shift-invert block subspace iteration (degeneracy-safe, deterministic)
// ---------------------------------------------------------------------------

struct SparsePairs {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> vectors;
};

SparsePairs lanczos_smallest(const Eigen::SparseMatrix<double>& A, int k, double opnorm) {
  const int n = static_cast<int>(A.rows());
  const double glo = gershgorin_lower(A);
  double sigma = glo - 0.01 * std::max(1.0, std::abs(glo));

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol;
  for (int attempt = 0;; ++attempt) {
    chol.compute(shifted(A, sigma));
    if (chol.info() == Eigen::Success) break;
    if (attempt >= 3) solver_fail("shift-invert factorization failed");
    sigma -= std::max(1.0, std::abs(glo));
  }

  int b = std::min(n, k + std::min(k, 10) + 6);
  Eigen::MatrixXd X(n, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = deterministic_entry(static_cast<uint64_t>(j) * n + i);
  X = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ() * Eigen::MatrixXd::Identity(n, b);

  const double tol = 1e-9 * std::max(opnorm, 1.0);
  int grow_left = 1;
  for (int iter = 0; iter < 400; ++iter) {
    Eigen::MatrixXd Y(n, b);
    for (int j = 0; j < b; ++j) Y.col(j) = chol.solve(X.col(j));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Y = qr.householderQ() * Eigen::MatrixXd::Identity(n, b);

    Eigen::MatrixXd AY(n, b);
    for (int j = 0; j < b; ++j) AY.col(j) = A * Y.col(j);
    Eigen::MatrixXd H = Y.transpose() * AY;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    X = Y * es.eigenvectors();

    bool done = true;
    for (int j = 0; j < k && done; ++j) {
      const double lam = es.eigenvalues()[j];
      if ((A * X.col(j) - lam * X.col(j)).norm() > tol) done = false;
    }
    if (done) {
      SparsePairs out;
      for (int j = 0; j < k; ++j) {
        out.lambdas.push_back(es.eigenvalues()[j]);
        out.vectors.push_back(X.col(j).normalized());
      }
      return out;
    }
    if (iter == 200 && grow_left > 0) {
      // slow separation from the bulk: widen the block once
      --grow_left;
      const int b2 = std::min(n, 2 * b + 10);
      Eigen::MatrixXd X2(n, b2);
      X2.leftCols(b) = X;
      for (int j = b; j < b2; ++j)
        for (int i = 0; i < n; ++i)
          X2(i, j) = deterministic_entry(static_cast<uint64_t>(j + 7) * n + i);
      X = Eigen::HouseholderQR<Eigen::MatrixXd>(X2).householderQ() *
          Eigen::MatrixXd::Identity(n, b2);
      b = b2;
    }
  }
  solver_fail("shift-invert iteration cap reached without certified completeness");
}

}  // namespace

const char* to_string(CountMethod m) {
  switch (m) {
    case CountMethod::sturm: return "sturm";
    case CountMethod::inertia: return "inertia";
    case CountMethod::dense: return "dense";
  }
  return "?";
}

int sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double lambda) {
  const int n = static_cast<int>(diag.size());
  int count = 0;
  double q = diag[0] - lambda;
  if (q == 0.0) q = std::numeric_limits<double>::denorm_min();
  if (q < 0) ++count;
  for (int i = 1; i < n; ++i) {
    q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q;
    if (q == 0.0) q = std::numeric_limits<double>::denorm_min();
    if (q < 0) ++count;
  }
  return count;
}

int inertia_count(const Eigen::SparseMatrix<double>& A, double lambda, bool& ok) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(shifted(A, lambda));
  ok = ldlt.info() == Eigen::Success;
  if (!ok) return 0;
  const Eigen::VectorXd D = ldlt.vectorD();
  if (!D.allFinite()) {
    ok = false;
    return 0;
  }
  const double dmax = D.cwiseAbs().maxCoeff();
  int count = 0;
  for (int i = 0; i < D.size(); ++i) {
    if (std::abs(D[i]) <= 1e-13 * dmax) {
      ok = false;  // pivot breakdown: lambda too close to an eigenvalue
      return 0;
    }
    if (D[i] < 0) ++count;
  }
  return count;
}

int dense_count(const Eigen::SparseMatrix<double>& A, double lambda) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A),
                                                    Eigen::EigenvaluesOnly);
  int count = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < lambda) ++count;
  return count;
}

void tridiagonal_bands(const Eigen::SparseMatrix<double>& A, Eigen::VectorXd& diag,
                       Eigen::VectorXd& off) {
  const int n = static_cast<int>(A.rows());
  diag = Eigen::VectorXd::Zero(n);
  off = Eigen::VectorXd::Zero(std::max(0, n - 1));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (it.row() == it.col()) diag[it.row()] = it.value();
      else if (it.row() == it.col() + 1) off[it.col()] = it.value();
      else if (it.row() + 1 == it.col()) off[it.row()] = it.value();
      else if (it.value() != 0.0)
        solver_fail("matrix is not tridiagonal");
    }
  }
}

CountCertificate count_below(const DiscreteOperator& op, double lambda) {
  CountCertificate cert;
  cert.lambda_requested = lambda;
  cert.lambda_used = lambda;
  const double scale = std::max(op.norm_inf(), 1e-30);

  if (op.tridiagonal) {
    Eigen::VectorXd diag, off;
    tridiagonal_bands(op.matrix, diag, off);
    cert.method = CountMethod::sturm;
    const double window = 1e-10 * scale;
    if (sturm_count(diag, off, lambda - window) != sturm_count(diag, off, lambda + window)) {
      cert.perturbed = true;
      cert.lambda_used = lambda + 1e-9 * scale;
    }
    cert.count = sturm_count(diag, off, cert.lambda_used);
    return cert;
  }

  cert.method = CountMethod::inertia;
  bool ok = false;
  cert.count = inertia_count(op.matrix, cert.lambda_used, ok);
  if (!ok) {
    cert.perturbed = true;
    cert.lambda_used = lambda + 1e-9 * scale;
    cert.count = inertia_count(op.matrix, cert.lambda_used, ok);
  }
  if (!ok) {
    if (op.dim() > kDenseFallbackCap)
      solver_fail("inertia factorization broke down and the matrix is too large for dense fallback");
    cert.method = CountMethod::dense;
    cert.count = dense_count(op.matrix, cert.lambda_used);
  }
  return cert;
}

EigenResult eigs_below(const DiscreteOperator& op, double tau) {
  EigenResult res;
  res.threshold = tau;
  res.op_norm = op.norm_inf();
  const CountCertificate cert = count_below(op, tau);
  const double tau_used = cert.lambda_used;
  const int k = cert.count;
  if (k == 0) return res;

  auto push_pair = [&](double lam, const Eigen::VectorXd& x) {
    res.lambdas.push_back(lam);
    res.vectors.push_back(embed_vector(op, x));
    res.residuals.push_back((op.matrix * x - lam * x).norm());
  };

  if (op.dim() <= kDenseCutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.matrix)};
    for (int i = 0; i < k; ++i) push_pair(es.eigenvalues()[i], es.eigenvectors().col(i));
  } else if (op.tridiagonal) {
    Eigen::VectorXd diag, off;
    tridiagonal_bands(op.matrix, diag, off);
    TriPairs pairs = tridiag_smallest(diag, off, k, std::max(res.op_norm, 1.0));
    for (int i = 0; i < k; ++i) push_pair(pairs.lambdas[i], pairs.vectors[i]);
  } else {
    SparsePairs pairs = lanczos_smallest(op.matrix, k, res.op_norm);
    for (int i = 0; i < k; ++i) push_pair(pairs.lambdas[i], pairs.vectors[i]);
  }

  // completeness: everything we return lies below the certified threshold
  for (double lam : res.lambdas)
    if (!(lam < tau_used))
      solver_fail("computed eigenvalue crossed the counting threshold; completeness lost");
  for (double r : res.residuals)
    if (!(r <= 1e-8 * std::max(res.op_norm, 1.0)))
      solver_fail("eigenpair residual above certification tolerance");
  return res;
}

double neg_sum(const EigenResult& res, double p) {
  if (res.threshold != 0.0)
    throw std::invalid_argument("speclab: neg_sum requires an EigenResult with threshold 0");
  if (!(p > 0)) throw std::invalid_argument("speclab: neg_sum requires p > 0");
  double s = 0.0;
  for (double lam : res.lambdas)
    if (lam < 0) s += std::pow(-lam, p);
  return s;
}

GroundState ground_state(const DiscreteOperator& op) {
  GroundState gs;
  const double scale = std::max(op.norm_inf(), 1e-30);
  Eigen::VectorXd x;

  if (op.dim() <= kDenseCutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.matrix)};
    gs.lambda = es.eigenvalues()[0];
    gs.gap = es.eigenvalues()[1] - es.eigenvalues()[0];
    x = es.eigenvectors().col(0);
  } else if (op.tridiagonal) {
    Eigen::VectorXd diag, off;
    tridiagonal_bands(op.matrix, diag, off);
    TriPairs pairs = tridiag_smallest(diag, off, 2, scale);
    gs.lambda = pairs.lambdas[0];
    gs.gap = pairs.lambdas[1] - pairs.lambdas[0];
    x = pairs.vectors[0];
  } else {
    SparsePairs pairs = lanczos_smallest(op.matrix, 2, scale);
    gs.lambda = pairs.lambdas[0];
    gs.gap = pairs.lambdas[1] - pairs.lambdas[0];
    x = pairs.vectors[0];
  }

  gs.degenerate = gs.gap < 1e-10 * scale;
  double s = x.sum();
  if (s == 0.0) {
    for (int i = 0; i < x.size(); ++i)
      if (std::abs(x[i]) > 1e-12) {
        s = x[i];
        break;
      }
  }
  if (s < 0) x = -x;
  gs.psi = embed_vector(op, x);
  return gs;
}

void write_eigenresult_csv(const EigenResult& res, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("speclab: cannot open '" + path + "'");
  os << "k,lambda,residual\n";
  char buf[96];
  for (int i = 0; i < res.count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", i, res.lambdas[i], res.residuals[i]);
    os << buf;
  }
}

}  // namespace speclab
