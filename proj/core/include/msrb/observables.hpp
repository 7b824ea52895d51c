#pragma once

#include <string>
#include <vector>

#include "msrb/common.hpp"
#include "msrb/mesh.hpp"

namespace msrb {

struct ErrorReport {
  double error_l2 = 0.0;
  double error_h1 = 0.0;
  Index n_samples = 0;
  std::string manifest;
};

/// Sample mean of reconstructed fine-grid wavefunctions, in a fixed
/// pairwise reduction order.
CVec expected_wavefunction(const std::vector<CVec>& reconstructed);

/// Relative L2 and H1 errors of a mean against a reference mean on the same
/// fine grid, via the mass and stiffness quadratic forms.
ErrorReport relative_errors(const CVec& numerical, const CVec& reference,
                            const SpMat& M, const SpMat& S);

/// Second moment A(t) = E[ int |x|^2 |psi|^2 dx ] over the representative
/// cell; exact Gauss quadrature of the interpolants.
double second_moment(const std::vector<CVec>& samples, const PeriodicGrid& grid);
double second_moment_single(const CVec& psi, const PeriodicGrid& grid);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope in log-log coordinates of (n or H, error) pairs.
double convergence_rate_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace msrb
