#pragma once

#include <memory>
#include <vector>

#include "msrb/assembly.hpp"
#include "msrb/common.hpp"
#include "msrb/pod.hpp"
#include "msrb/random_field.hpp"

namespace msrb {

struct WaveState {
  CVec c;
  double t = 0.0;
};

/// Galerkin system i eps M dc/dt = ((eps^2/2) S + V(omega)) c in either the
/// fine nodal basis or the reduced basis spanned by the per-node functions
/// (zeta_0 first, then modes, node-major). The potential matrix is kept as
/// an affine family V(xi) = V_bar + sum_j xi_j W_j so per-sample assembly is
/// a coefficient combination.
class GalerkinSystem {
public:
  static GalerkinSystem fine(const PeriodicGrid& grid,
                             const KLPotential& potential, double eps);
  static GalerkinSystem reduced(const std::vector<ReducedBasisSet>& sets,
                                const PeriodicGrid& fine_grid,
                                const KLPotential& potential, double eps);

  Index dim() const { return m_r_.rows(); }
  Index fine_dim() const { return fine_nodes_; }
  double eps() const { return eps_; }
  bool is_fine() const { return is_fine_; }

  const SpMat& stiffness() const { return s_r_; }
  const SpMat& mass() const { return m_r_; }

  /// Reduced potential matrix for one draw of the variables.
  SpMat potential_matrix(const Vec& xi) const;
  SpMat potential_matrix(const PotentialSample& sample) const;
  /// Hamiltonian A(xi) = (eps^2/2) S + V(xi).
  SpMat hamiltonian(const Vec& xi) const;

  /// L2 projection onto the basis: solve M_r c = Z^T M psi.
  WaveState project_initial(const CVec& psi_fine) const;
  WaveState project_initial(const Vec& psi_fine) const;

  /// psi = Z c on the fine grid.
  CVec reconstruct(const CVec& c) const;
  CVec reconstruct(const WaveState& s) const { return reconstruct(s.c); }

  double m_norm(const CVec& c) const;

private:
  GalerkinSystem() = default;
  void finalize(const SpMat& fine_S, const SpMat& fine_M);

  bool is_fine_ = true;
  std::vector<Index> col_node_;  // reduced column -> coarse node
  double eps_ = 1.0;
  Index fine_nodes_ = 0;
  SpMat z_;       // fine x reduced basis matrix
  SpMat s_r_, m_r_;
  SpMat v_bar_r_;
  std::vector<SpMat> v_mode_r_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> mass_solver_;
  SpMat fine_m_;  // for projections
};

/// Crank-Nicolson stepper for one sample; owns the factorization of
/// (M + i dt/(2 eps) A), reused across steps of the same size.
class CrankNicolson {
public:
  CrankNicolson(const GalerkinSystem& system, const Vec& xi, double dt);

  double dt() const { return dt_; }
  WaveState step(const WaveState& state) const;

private:
  double dt_;
  CSpMat rhs_op_;
  std::shared_ptr<Eigen::SparseLU<CSpMat>> solver_;
};

/// Single uncached step (M + i dt/(2 eps) A) c+ = (M - i dt/(2 eps) A) c.
WaveState step_crank_nicolson(const GalerkinSystem& system, const Vec& xi,
                              const WaveState& state, double dt);

/// March to time T; the last step is shortened so the final time is hit
/// exactly. Returns the final state.
WaveState evolve(const GalerkinSystem& system, const Vec& xi, const Vec& psi_in,
                 double T, double dt);
WaveState evolve(const GalerkinSystem& system, const Vec& xi,
                 const WaveState& initial, double T, double dt);

/// Trajectory at n_outputs roughly uniform times (step-aligned, final time
/// included).
std::vector<WaveState> evolve_trajectory(const GalerkinSystem& system,
                                         const Vec& xi, const Vec& psi_in,
                                         double T, double dt, int n_outputs);

/// Central finite difference of the final-time wavefunction with respect to
/// xi_j, measured in the fine-grid L2 norm.
double sensitivity_check(const GalerkinSystem& system, const SpMat& fine_M,
                         const Vec& xi, int j, double delta, const Vec& psi_in,
                         double T, double dt);

}  // namespace msrb
