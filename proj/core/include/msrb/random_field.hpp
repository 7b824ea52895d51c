#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msrb/common.hpp"
#include "msrb/mesh.hpp"

namespace msrb {

/// Truncated KL-type potential on a fine grid:
///   v(x, xi) = mean(x) + sum_j xi_j * amplitude_j * mode_j(x),
/// with the xi_j mean-zero, unit-variance uniforms on [-sqrt(3), sqrt(3)].
struct KLPotential {
  Vec mean;                    // nodal values of the mean field
  std::vector<Vec> modes;      // nodal mode shapes, one per random dimension
  Vec amplitudes;              // per-mode scalar (sigma/j^beta or sqrt(lambda_j))
  int m = 0;                   // random dimension
  std::string kind = "custom";
  // Spectrum of the covariance operator when built from a kernel.
  std::optional<Vec> eigenvalues;

  int dimension() const { return m; }
};

struct PotentialSample {
  Vec values;  // nodal values over the fine grid
  Vec xi;      // the variables that produced them
};

enum class PotentialKind { Sect5Multiscale, Decay1D, Anderson1D, Anderson2D };

PotentialKind parse_potential_kind(const std::string& name);
std::string to_string(PotentialKind kind);

/// The analytic example potentials:
///   sect5-multiscale  1 + sigma sum_{j=1}^{3} sin(j x^2) sin(x/E_j) xi_j
///   decay-1d          1 + sigma sum_{j=1}^{m} j^{-beta} sin(j x) xi_j
///   anderson-1d       sigma sum_{j=1}^{m} j^{-beta} sin(j x) xi_j
///   anderson-2d       sigma sum_{j=1}^{m} j^{-beta} sin(j x1) sin(j x2) xi_j
/// For sect5-multiscale the scale vector E must have length m.
KLPotential make_example_1d(PotentialKind kind, const PeriodicGrid& grid,
                            double sigma, double beta, int m,
                            const std::vector<double>& E = {});

PotentialSample sample(const KLPotential& potential, const Vec& xi);

/// Gaussian covariance kernel C(x,y) = sigma^2 exp(-sum_i |x_i-y_i|^2 / (2 l_i^2)).
struct GaussianKernel {
  double sigma = 1.0;
  std::array<double, 2> correlation_length = {1.0, 1.0};
};

/// Discretize the kernel on the grid, solve the mass-weighted symmetric
/// eigenproblem, and keep the m leading eigenpairs (descending). Modes come
/// back L2-orthonormal on the grid. If fewer than m eigenvalues are
/// positive, the expansion is truncated with a warning on stderr.
KLPotential kl_from_kernel(const GaussianKernel& kernel, const PeriodicGrid& grid,
                           int m, const Vec& mean_field = Vec());

/// Worst-case pointwise bounds of the potential over xi in [-sqrt3, sqrt3]^m.
struct PotentialBounds {
  double v_min;
  double v_max;
};

PotentialBounds bounds(const KLPotential& potential);

/// Potential with the trailing modes beyond m_keep removed; used for KL
/// truncation studies.
KLPotential truncate_modes(const KLPotential& potential, int m_keep);

/// Canonical description used in cache keys and manifests.
std::string describe(const KLPotential& potential);

}  // namespace msrb
