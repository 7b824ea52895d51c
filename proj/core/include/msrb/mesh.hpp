#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "msrb/common.hpp"

namespace msrb {

/// Uniform periodic tensor mesh in 1D or 2D. Nodes are identified across the
/// periodic boundary, so node count equals cell count per axis.
class PeriodicGrid {
public:
  PeriodicGrid(int dim, std::array<double, 2> origin,
               std::array<double, 2> length, std::array<int, 2> n_cells);

  /// 1D convenience: domain [a, a+L) split into n cells.
  static PeriodicGrid line(double a, double length, int n_cells);
  /// 2D convenience: square [a, a+L)^2 with n cells per axis.
  static PeriodicGrid square(double a, double length, int n_cells);

  int dim() const { return dim_; }
  double origin(int axis) const { return origin_[axis]; }
  double length(int axis) const { return length_[axis]; }
  int cells(int axis) const { return n_cells_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }

  Index node_count() const;
  Index cell_count() const;

  /// Flattened node index from per-axis indices (periodically wrapped).
  Index node_index(int ix, int iy = 0) const;
  std::array<int, 2> node_coords(Index node) const;
  /// Physical coordinates of a node: origin + i * spacing.
  std::array<double, 2> node_position(Index node) const;

  int wrap(int i, int axis) const;

private:
  int dim_;
  std::array<double, 2> origin_;
  std::array<double, 2> length_;
  std::array<int, 2> n_cells_;
  std::array<double, 2> spacing_;
};

PeriodicGrid build_grid(int dim, std::array<double, 2> origin,
                        std::array<double, 2> length,
                        std::array<int, 2> n_cells);

/// Nested coarse/fine pair with integer refinement per axis.
struct CoarseFineMap {
  CoarseFineMap(PeriodicGrid coarse_grid, PeriodicGrid fine_grid);

  PeriodicGrid coarse;
  PeriodicGrid fine;
  std::array<int, 2> refinement;
};

/// Coarse hat function evaluated at every fine node (dense vector of
/// weights). Value 1 at the coarse node, 0 at all other coarse nodes.
Vec nodal_basis_on_fine(const CoarseFineMap& map, Index coarse_node);

/// Nested nodal patches around a coarse node. Each layer is a periodically
/// wrapped box of coarse cells: layer 0 is the support of the nodal hat,
/// and every further layer adds one cell of adjacency in each direction.
class PatchFamily {
public:
  PatchFamily(const CoarseFineMap& map, Index center_node, int max_layer);

  Index center_node() const { return center_; }
  int max_layer() const { return max_layer_; }
  const CoarseFineMap& map() const { return *map_; }

  /// Number of coarse cells in layer ell.
  Index cell_count(int ell) const;
  bool contains_cell(int ell, int cx, int cy = 0) const;
  /// Coarse cells of layer ell as wrapped (cx, cy) pairs.
  std::vector<std::array<int, 2>> cells(int ell) const;

  /// All fine nodes covered by the closed patch (cell closures included).
  std::vector<Index> fine_nodes(int ell) const;
  /// Fine nodes whose nodal hat is supported inside the patch; these are
  /// the free unknowns of a localized solve with zero trace on the patch
  /// boundary. Equals all fine nodes once the patch saturates.
  std::vector<Index> interior_fine_nodes(int ell) const;

  bool saturated(int ell) const;

private:
  // Per-axis wrapped cell interval [lo, lo+len) for a given layer.
  struct AxisSpan {
    int lo;
    int len;
  };
  AxisSpan span(int ell, int axis) const;

  const CoarseFineMap* map_;
  Index center_;
  int max_layer_;
};

PatchFamily patch_layers(const CoarseFineMap& map, Index coarse_node,
                         int max_layer);

struct ResolutionCheck {
  double ratio;
  bool pass;
};

/// Coarse-mesh resolution indicator sqrt(V0) * H / eps; a warning signal,
/// never a hard failure.
ResolutionCheck resolution_check(double eps, double H, double V0,
                                 double threshold = 1.0);

}  // namespace msrb
