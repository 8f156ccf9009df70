#pragma once

#include "speclab/grid.hpp"
#include "speclab/report.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

/// Full negative count of -Delta - V in R^d for a radial potential: the
/// multiplicity-weighted sum over angular-momentum sectors, each reduced to a
/// half-line operator with centrifugal [l(l+d-2) + (d-1)(d-3)/4]/r^2. The sector
/// counts are nonincreasing in l, so the sum terminates at the first empty one.
CountCertificate radial_total_count(const Field& V, double lambda);

/// N <= C int V^{d/2} on a radial domain, d >= 3. With no constant supplied the
/// report records the ratio and is labeled empirical.
BoundReport clr_report(const Field& V, const CountCertificate& N,
                       std::optional<double> C = std::nullopt);

/// int V <= (6^4 + 12 + 4N) N for bounded V >= 0 on a 2D grid, N the negative
/// count of -Delta - V.
BoundReport gny_certificate(const Field& V);

/// Weighted eigenvalue-sum bounds on the exterior domain (Neumann at r=1):
/// p <= 1/2: int V^{1/2+p} |x|^{1-d} vs 1 + sum |lambda_n|^p;
/// p >= 1/2: sum_n (int_{n<|x|<=n+1} V |x|^{1-d})^{2p} vs the same right side.
BoundReport dr_report(const Field& V, double p, double lambda0,
                      std::optional<double> C = std::nullopt);

/// ((d-2)^2/4 int u^2/|x|^2) / int |grad u|^2 for radial u supported away from 0.
double hardy_ratio(const Field& u, int d);

/// With H = -Delta - V nonnegative outside the ball of radius B (verified),
/// tests the power function phi = |x|^{-d/2+1-eps/2} (tapered) in the form
/// inequality, and reports int_{|x|>1} V |x|^{-(d-2+eps)} dx.
BoundReport decay_certificate(const Field& V, double eps, double B_radius);

/// Exact integer splitting N(W1+W2) <= N(eps^-1 W1) + N((1-eps)^-1 W2).
BoundReport split_count_check(const Field& W1, const Field& W2, double eps,
                              std::optional<double> centrifugal = std::nullopt);

/// With H = -Delta - V >= -gamma^2 on the region (verified), checks
/// int V phi^2 <= gamma^2 int phi^2 + int |grad phi|^2 for phi supported there.
BoundReport rayleigh_certificate(const Field& V, double gamma2, const Field& phi,
                                 const std::vector<char>& region);

}  // namespace speclab
