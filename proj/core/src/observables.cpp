#include "msrb/observables.hpp"

#include <cmath>
#include <stdexcept>

#include "msrb/assembly.hpp"

namespace msrb {

CVec expected_wavefunction(const std::vector<CVec>& reconstructed) {
  if (reconstructed.empty())
    throw std::invalid_argument("expected_wavefunction: empty sample list");
  const Index n = reconstructed.front().size();
  for (const CVec& v : reconstructed)
    if (v.size() != n)
      throw std::invalid_argument("expected_wavefunction: grid mismatch");
  return pairwise_mean(reconstructed);
}

namespace {

double quad_norm(const CVec& v, const SpMat& W) {
  const Complex q = v.dot(W.cast<Complex>() * v);
  return std::sqrt(std::max(0.0, q.real()));
}

}  // namespace

ErrorReport relative_errors(const CVec& numerical, const CVec& reference,
                            const SpMat& M, const SpMat& S) {
  if (numerical.size() != reference.size())
    throw std::invalid_argument("relative_errors: grid mismatch");
  const SpMat H1 = S + M;
  const double ref_l2 = quad_norm(reference, M);
  const double ref_h1 = quad_norm(reference, H1);
  if (ref_l2 <= 0.0 || ref_h1 <= 0.0)
    throw std::invalid_argument("relative_errors: zero-norm reference");
  const CVec e = numerical - reference;
  ErrorReport rep;
  rep.error_l2 = quad_norm(e, M) / ref_l2;
  rep.error_h1 = quad_norm(e, H1) / ref_h1;
  return rep;
}

double second_moment_single(const CVec& psi, const PeriodicGrid& grid) {
  if (psi.size() != grid.node_count())
    throw std::invalid_argument("second_moment: grid mismatch");
  // 3-point Gauss per axis: exact for |x|^2 |psi_h|^2 (degree 4 per axis).
  static const double gx[3] = {0.5 * (1.0 - std::sqrt(0.6)), 0.5,
                               0.5 * (1.0 + std::sqrt(0.6))};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

  double acc = 0.0;
  if (grid.dim() == 1) {
    const double h = grid.spacing(0);
    for (int cx = 0; cx < grid.cells(0); ++cx) {
      const auto nodes = cell_nodes(grid, cx);
      const double x0 = grid.origin(0) + cx * h;
      for (int g = 0; g < 3; ++g) {
        const double t = gx[g];
        const Complex p = psi[nodes[0]] * (1.0 - t) + psi[nodes[1]] * t;
        const double x = x0 + t * h;
        acc += gw[g] * h * x * x * std::norm(p);
      }
    }
    return acc;
  }
  const double hx = grid.spacing(0), hy = grid.spacing(1);
  for (int cy = 0; cy < grid.cells(1); ++cy)
    for (int cx = 0; cx < grid.cells(0); ++cx) {
      const auto nodes = cell_nodes(grid, cx, cy);
      const double x0 = grid.origin(0) + cx * hx;
      const double y0 = grid.origin(1) + cy * hy;
      for (int gy_ = 0; gy_ < 3; ++gy_)
        for (int gx_ = 0; gx_ < 3; ++gx_) {
          const double tx = gx[gx_], ty = gx[gy_];
          const Complex p = psi[nodes[0]] * (1 - tx) * (1 - ty) +
                            psi[nodes[1]] * tx * (1 - ty) +
                            psi[nodes[2]] * (1 - tx) * ty +
                            psi[nodes[3]] * tx * ty;
          const double x = x0 + tx * hx;
          const double y = y0 + ty * hy;
          acc += gw[gx_] * gw[gy_] * hx * hy * (x * x + y * y) * std::norm(p);
        }
    }
  return acc;
}

double second_moment(const std::vector<CVec>& samples, const PeriodicGrid& grid) {
  if (samples.empty()) throw std::invalid_argument("second_moment: no samples");
  double acc = 0.0;
  for (const CVec& psi : samples) acc += second_moment_single(psi, grid);
  return acc / double(samples.size());
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit needs >= 2 matched points");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;

  const double mean_y = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double convergence_rate_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("convergence_rate_fit needs >= 3 points");
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::invalid_argument("convergence_rate_fit needs positive data");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  return linear_fit(lx, ly).slope;
}

}  // namespace msrb
