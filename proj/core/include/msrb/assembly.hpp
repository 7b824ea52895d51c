#pragma once

#include <array>

#include "msrb/common.hpp"
#include "msrb/mesh.hpp"
#include "msrb/random_field.hpp"

namespace msrb {

/// Global node indices of a cell's vertices in tensor order
/// (0,0),(1,0),(0,1),(1,1); the first two entries in 1D.
std::array<Index, 4> cell_nodes(const PeriodicGrid& grid, int cx, int cy = 0);

/// Element matrices for P1 (1D) / bilinear (2D) nodal bases. The potential
/// element matrix integrates the nodally interpolated potential with Gauss
/// quadrature that is exact for the resulting polynomial degree.
Mat element_stiffness(const PeriodicGrid& grid);
Mat element_mass(const PeriodicGrid& grid);
Mat element_potential(const PeriodicGrid& grid, const Vec& v_local);

/// S_ij = int grad(phi_i) . grad(phi_j); periodic wrap, zero row sums.
SpMat assemble_S(const PeriodicGrid& fine);
/// M_ij = int phi_i phi_j; symmetric positive definite.
SpMat assemble_M(const PeriodicGrid& fine);
/// V_ij = int v phi_i phi_j with v interpolated from nodal sample values.
SpMat assemble_V(const PeriodicGrid& fine, const PotentialSample& sample);
SpMat assemble_V(const PeriodicGrid& fine, const Vec& v_nodal);
/// Q = (eps^2/2) S + V + shift M.
SpMat assemble_Q(const SpMat& S, const SpMat& V, double eps, double shift,
                 const SpMat& M);
/// Constraint matrix A (N_H x N_h) with A_ji = (phi_i^h, phi_j^H); equals
/// interpolation^T * M for nested grids, hence full row rank.
SpMat assemble_A(const CoarseFineMap& map);

/// Coarse-to-fine interpolation (N_h x N_H): column j holds the coarse hat
/// phi_j^H sampled at fine nodes.
SpMat interpolation_matrix(const CoarseFineMap& map);

}  // namespace msrb
