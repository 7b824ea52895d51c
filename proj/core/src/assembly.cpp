#include "msrb/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace msrb {

std::array<Index, 4> cell_nodes(const PeriodicGrid& grid, int cx, int cy) {
  if (grid.dim() == 1)
    return {grid.node_index(cx), grid.node_index(cx + 1), -1, -1};
  return {grid.node_index(cx, cy), grid.node_index(cx + 1, cy),
          grid.node_index(cx, cy + 1), grid.node_index(cx + 1, cy + 1)};
}

namespace {

Mat stiffness_1d(double h) {
  Mat k(2, 2);
  k << 1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h;
  return k;
}

Mat mass_1d(double h) {
  Mat m(2, 2);
  m << h / 3.0, h / 6.0, h / 6.0, h / 3.0;
  return m;
}

Mat tensor4(const Mat& ax, const Mat& ay) {
  Mat out(4, 4);
  for (int iy = 0; iy < 2; ++iy)
    for (int ix = 0; ix < 2; ++ix)
      for (int jy = 0; jy < 2; ++jy)
        for (int jx = 0; jx < 2; ++jx)
          out(ix + 2 * iy, jx + 2 * jy) = ax(ix, jx) * ay(iy, jy);
  return out;
}

}  // namespace

Mat element_stiffness(const PeriodicGrid& grid) {
  if (grid.dim() == 1) return stiffness_1d(grid.spacing(0));
  return tensor4(stiffness_1d(grid.spacing(0)), mass_1d(grid.spacing(1))) +
         tensor4(mass_1d(grid.spacing(0)), stiffness_1d(grid.spacing(1)));
}

Mat element_mass(const PeriodicGrid& grid) {
  if (grid.dim() == 1) return mass_1d(grid.spacing(0));
  return tensor4(mass_1d(grid.spacing(0)), mass_1d(grid.spacing(1)));
}

Mat element_potential(const PeriodicGrid& grid, const Vec& v_local) {
  // 2-point Gauss per axis: exact for v * N_a * N_b (degree 3 per axis).
  static const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0),
                               0.5 + 0.5 / std::sqrt(3.0)};
  if (grid.dim() == 1) {
    const double h = grid.spacing(0);
    Mat out = Mat::Zero(2, 2);
    for (double t : gp) {
      const double n0 = 1.0 - t, n1 = t;
      const double v = v_local[0] * n0 + v_local[1] * n1;
      const double w = 0.5 * h * v;
      out(0, 0) += w * n0 * n0;
      out(0, 1) += w * n0 * n1;
      out(1, 0) += w * n1 * n0;
      out(1, 1) += w * n1 * n1;
    }
    return out;
  }
  const double hx = grid.spacing(0), hy = grid.spacing(1);
  Mat out = Mat::Zero(4, 4);
  double shape[4];
  for (double ty : gp)
    for (double tx : gp) {
      shape[0] = (1.0 - tx) * (1.0 - ty);
      shape[1] = tx * (1.0 - ty);
      shape[2] = (1.0 - tx) * ty;
      shape[3] = tx * ty;
      double v = 0.0;
      for (int a = 0; a < 4; ++a) v += v_local[a] * shape[a];
      const double w = 0.25 * hx * hy * v;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) out(a, b) += w * shape[a] * shape[b];
    }
  return out;
}

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat assemble_from_elements(const PeriodicGrid& grid, const Mat& ke) {
  const Index n = grid.node_count();
  const int k = grid.dim() == 1 ? 2 : 4;
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(grid.cell_count()) * k * k);
  const int ny = grid.dim() == 2 ? grid.cells(1) : 1;
  for (int cy = 0; cy < ny; ++cy)
    for (int cx = 0; cx < grid.cells(0); ++cx) {
      const auto nodes = cell_nodes(grid, cx, cy);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          trips.emplace_back(nodes[a], nodes[b], ke(a, b));
    }
  SpMat out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace

SpMat assemble_S(const PeriodicGrid& fine) {
  return assemble_from_elements(fine, element_stiffness(fine));
}

SpMat assemble_M(const PeriodicGrid& fine) {
  return assemble_from_elements(fine, element_mass(fine));
}

SpMat assemble_V(const PeriodicGrid& fine, const Vec& v_nodal) {
  if (v_nodal.size() != fine.node_count())
    throw std::invalid_argument("potential sample is on a different grid");
  const Index n = fine.node_count();
  const int k = fine.dim() == 1 ? 2 : 4;
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(fine.cell_count()) * k * k);
  Vec v_local(k);
  const int ny = fine.dim() == 2 ? fine.cells(1) : 1;
  for (int cy = 0; cy < ny; ++cy)
    for (int cx = 0; cx < fine.cells(0); ++cx) {
      const auto nodes = cell_nodes(fine, cx, cy);
      for (int a = 0; a < k; ++a) v_local[a] = v_nodal[nodes[a]];
      const Mat ke = element_potential(fine, v_local);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          trips.emplace_back(nodes[a], nodes[b], ke(a, b));
    }
  SpMat out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat assemble_V(const PeriodicGrid& fine, const PotentialSample& sample) {
  return assemble_V(fine, sample.values);
}

SpMat assemble_Q(const SpMat& S, const SpMat& V, double eps, double shift,
                 const SpMat& M) {
  if (shift < 0.0) throw std::invalid_argument("shift must be >= 0");
  SpMat q = (0.5 * eps * eps) * S + V;
  if (shift > 0.0) q += shift * M;
  q.makeCompressed();
  return q;
}

SpMat interpolation_matrix(const CoarseFineMap& map) {
  const Index nh = map.fine.node_count();
  const Index nH = map.coarse.node_count();
  std::vector<Triplet> trips;
  // Each fine node lies in one coarse cell and sees its 2^d corner hats.
  const int rx = map.refinement[0];
  const int ry = map.coarse.dim() == 2 ? map.refinement[1] : 1;
  const int ny = map.coarse.dim() == 2 ? map.fine.cells(1) : 1;
  for (int iy = 0; iy < ny; ++iy) {
    const int cy = iy / ry;
    const double ty = double(iy - cy * ry) / ry;
    for (int ix = 0; ix < map.fine.cells(0); ++ix) {
      const int cx = ix / rx;
      const double tx = double(ix - cx * rx) / rx;
      const Index fine_node = map.fine.node_index(ix, iy);
      if (map.coarse.dim() == 1) {
        if (tx == 0.0) {
          trips.emplace_back(fine_node, map.coarse.node_index(cx), 1.0);
        } else {
          trips.emplace_back(fine_node, map.coarse.node_index(cx), 1.0 - tx);
          trips.emplace_back(fine_node, map.coarse.node_index(cx + 1), tx);
        }
      } else {
        const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty,
                             tx * ty};
        const Index c[4] = {map.coarse.node_index(cx, cy),
                            map.coarse.node_index(cx + 1, cy),
                            map.coarse.node_index(cx, cy + 1),
                            map.coarse.node_index(cx + 1, cy + 1)};
        for (int a = 0; a < 4; ++a)
          if (w[a] != 0.0) trips.emplace_back(fine_node, c[a], w[a]);
      }
    }
  }
  SpMat out(nh, nH);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat assemble_A(const CoarseFineMap& map) {
  const SpMat interp = interpolation_matrix(map);
  const SpMat M = assemble_M(map.fine);
  SpMat a = SpMat(interp.transpose()) * M;
  a.makeCompressed();
  return a;
}

}  // namespace msrb
