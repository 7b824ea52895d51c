#include "msrb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msrb {

PeriodicGrid::PeriodicGrid(int dim, std::array<double, 2> origin,
                           std::array<double, 2> length,
                           std::array<int, 2> n_cells)
    : dim_(dim), origin_(origin), length_(length), n_cells_(n_cells) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dim must be 1 or 2");
  for (int a = 0; a < dim_; ++a) {
    if (n_cells_[a] < 2)
      throw std::invalid_argument("grid needs at least 2 cells per axis");
    if (!(length_[a] > 0.0))
      throw std::invalid_argument("grid axis length must be positive");
    spacing_[a] = length_[a] / n_cells_[a];
  }
  if (dim_ == 1) {
    n_cells_[1] = 1;
    spacing_[1] = 0.0;
    length_[1] = 0.0;
    origin_[1] = 0.0;
  }
}

PeriodicGrid PeriodicGrid::line(double a, double length, int n_cells) {
  return PeriodicGrid(1, {a, 0.0}, {length, 0.0}, {n_cells, 1});
}

PeriodicGrid PeriodicGrid::square(double a, double length, int n_cells) {
  return PeriodicGrid(2, {a, a}, {length, length}, {n_cells, n_cells});
}

Index PeriodicGrid::node_count() const {
  return dim_ == 1 ? n_cells_[0] : Index(n_cells_[0]) * n_cells_[1];
}

Index PeriodicGrid::cell_count() const { return node_count(); }

int PeriodicGrid::wrap(int i, int axis) const {
  const int n = n_cells_[axis];
  int r = i % n;
  return r < 0 ? r + n : r;
}

Index PeriodicGrid::node_index(int ix, int iy) const {
  if (dim_ == 1) return wrap(ix, 0);
  return Index(wrap(iy, 1)) * n_cells_[0] + wrap(ix, 0);
}

std::array<int, 2> PeriodicGrid::node_coords(Index node) const {
  if (node < 0 || node >= node_count())
    throw std::out_of_range("node index out of range");
  if (dim_ == 1) return {int(node), 0};
  return {int(node % n_cells_[0]), int(node / n_cells_[0])};
}

std::array<double, 2> PeriodicGrid::node_position(Index node) const {
  auto c = node_coords(node);
  return {origin_[0] + c[0] * spacing_[0],
          dim_ == 2 ? origin_[1] + c[1] * spacing_[1] : 0.0};
}

PeriodicGrid build_grid(int dim, std::array<double, 2> origin,
                        std::array<double, 2> length,
                        std::array<int, 2> n_cells) {
  return PeriodicGrid(dim, origin, length, n_cells);
}

CoarseFineMap::CoarseFineMap(PeriodicGrid coarse_grid, PeriodicGrid fine_grid)
    : coarse(std::move(coarse_grid)), fine(std::move(fine_grid)) {
  if (coarse.dim() != fine.dim())
    throw std::invalid_argument("coarse/fine dimension mismatch");
  for (int a = 0; a < coarse.dim(); ++a) {
    if (fine.cells(a) % coarse.cells(a) != 0)
      throw std::invalid_argument("fine cells must nest in coarse cells");
    refinement[a] = fine.cells(a) / coarse.cells(a);
  }
  if (coarse.dim() == 1) refinement[1] = 1;
}

namespace {

// Periodic 1D hat of width H centered at coarse node j, evaluated at fine
// node i. Both grids share the origin, so only index arithmetic is needed.
double hat_weight_1d(int fine_idx, int coarse_node, int refinement, int n_fine) {
  int d = (fine_idx - coarse_node * refinement) % n_fine;
  if (d < 0) d += n_fine;
  if (d > n_fine / 2) d -= n_fine;
  const double t = std::abs(double(d)) / refinement;
  return t >= 1.0 ? 0.0 : 1.0 - t;
}

}  // namespace

Vec nodal_basis_on_fine(const CoarseFineMap& map, Index coarse_node) {
  if (coarse_node < 0 || coarse_node >= map.coarse.node_count())
    throw std::out_of_range("coarse node index out of range");
  const auto cc = map.coarse.node_coords(coarse_node);
  Vec w = Vec::Zero(map.fine.node_count());
  if (map.coarse.dim() == 1) {
    for (int i = 0; i < map.fine.cells(0); ++i)
      w[i] = hat_weight_1d(i, cc[0], map.refinement[0], map.fine.cells(0));
  } else {
    for (int iy = 0; iy < map.fine.cells(1); ++iy) {
      const double wy = hat_weight_1d(iy, cc[1], map.refinement[1], map.fine.cells(1));
      if (wy == 0.0) continue;
      for (int ix = 0; ix < map.fine.cells(0); ++ix) {
        const double wx = hat_weight_1d(ix, cc[0], map.refinement[0], map.fine.cells(0));
        if (wx != 0.0) w[map.fine.node_index(ix, iy)] = wx * wy;
      }
    }
  }
  return w;
}

PatchFamily::PatchFamily(const CoarseFineMap& map, Index center_node,
                         int max_layer)
    : map_(&map), center_(center_node), max_layer_(max_layer) {
  if (max_layer < 0) throw std::invalid_argument("max_layer must be >= 0");
  if (center_node < 0 || center_node >= map.coarse.node_count())
    throw std::out_of_range("coarse node index out of range");
}

PatchFamily::AxisSpan PatchFamily::span(int ell, int axis) const {
  const auto cc = map_->coarse.node_coords(center_);
  const int n = map_->coarse.cells(axis);
  // Layer ell covers cells [c-1-ell, c+ell]: 2(ell+1) cells until saturation.
  int len = 2 * (ell + 1);
  if (len >= n) return {0, n};
  return {map_->coarse.wrap(cc[axis] - 1 - ell, axis), len};
}

Index PatchFamily::cell_count(int ell) const {
  Index c = span(ell, 0).len;
  if (map_->coarse.dim() == 2) c *= span(ell, 1).len;
  return c;
}

bool PatchFamily::contains_cell(int ell, int cx, int cy) const {
  for (int a = 0; a < map_->coarse.dim(); ++a) {
    const AxisSpan s = span(ell, a);
    if (s.len == map_->coarse.cells(a)) continue;
    const int c = a == 0 ? cx : cy;
    int d = map_->coarse.wrap(c - s.lo, a);
    if (d >= s.len) return false;
  }
  return true;
}

std::vector<std::array<int, 2>> PatchFamily::cells(int ell) const {
  const AxisSpan sx = span(ell, 0);
  std::vector<std::array<int, 2>> out;
  if (map_->coarse.dim() == 1) {
    out.reserve(sx.len);
    for (int i = 0; i < sx.len; ++i)
      out.push_back({map_->coarse.wrap(sx.lo + i, 0), 0});
  } else {
    const AxisSpan sy = span(ell, 1);
    out.reserve(std::size_t(sx.len) * sy.len);
    for (int j = 0; j < sy.len; ++j)
      for (int i = 0; i < sx.len; ++i)
        out.push_back({map_->coarse.wrap(sx.lo + i, 0),
                       map_->coarse.wrap(sy.lo + j, 1)});
  }
  return out;
}

bool PatchFamily::saturated(int ell) const {
  for (int a = 0; a < map_->coarse.dim(); ++a)
    if (span(ell, a).len < map_->coarse.cells(a)) return false;
  return true;
}

namespace {

// Fine-node indices covered by a wrapped coarse-cell interval, either the
// closure (boundary nodes included) or the open interior.
std::vector<int> axis_nodes(const PeriodicGrid& fine, int lo_cell, int len_cells,
                            int refinement, int axis, bool interior) {
  const int n_fine = fine.cells(axis);
  if (len_cells * refinement >= n_fine) {
    std::vector<int> all(n_fine);
    for (int i = 0; i < n_fine; ++i) all[i] = i;
    return all;
  }
  const int first = interior ? lo_cell * refinement + 1 : lo_cell * refinement;
  const int count = interior ? len_cells * refinement - 1 : len_cells * refinement + 1;
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = fine.wrap(first + i, axis);
  return out;
}

}  // namespace

std::vector<Index> PatchFamily::fine_nodes(int ell) const {
  const auto sx = span(ell, 0);
  auto xs = axis_nodes(map_->fine, sx.lo, sx.len, map_->refinement[0], 0, false);
  std::vector<Index> out;
  if (map_->coarse.dim() == 1) {
    out.assign(xs.begin(), xs.end());
  } else {
    const auto sy = span(ell, 1);
    auto ys = axis_nodes(map_->fine, sy.lo, sy.len, map_->refinement[1], 1, false);
    out.reserve(xs.size() * ys.size());
    for (int iy : ys)
      for (int ix : xs) out.push_back(map_->fine.node_index(ix, iy));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> PatchFamily::interior_fine_nodes(int ell) const {
  const auto sx = span(ell, 0);
  auto xs = axis_nodes(map_->fine, sx.lo, sx.len, map_->refinement[0], 0, true);
  std::vector<Index> out;
  if (map_->coarse.dim() == 1) {
    out.assign(xs.begin(), xs.end());
  } else {
    const auto sy = span(ell, 1);
    auto ys = axis_nodes(map_->fine, sy.lo, sy.len, map_->refinement[1], 1, true);
    out.reserve(xs.size() * ys.size());
    for (int iy : ys)
      for (int ix : xs) out.push_back(map_->fine.node_index(ix, iy));
  }
  std::sort(out.begin(), out.end());
  return out;
}

PatchFamily patch_layers(const CoarseFineMap& map, Index coarse_node,
                         int max_layer) {
  return PatchFamily(map, coarse_node, max_layer);
}

ResolutionCheck resolution_check(double eps, double H, double V0,
                                 double threshold) {
  if (!(eps > 0.0) || !(H > 0.0) || V0 < 0.0)
    throw std::invalid_argument("resolution_check needs eps>0, H>0, V0>=0");
  const double ratio = std::sqrt(V0) * H / eps;
  return {ratio, ratio <= threshold};
}

}  // namespace msrb
