#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "msrb/assembly.hpp"
#include "msrb/common.hpp"
#include "msrb/mesh.hpp"
#include "msrb/random_field.hpp"
#include "msrb/sampling.hpp"

namespace msrb {

/// One multiscale basis function: the minimizer of (1/2) c^T Q c subject to
/// A c = e_node, either on the whole domain or restricted to a patch.
struct MultiscaleBasis {
  Index node = 0;
  Vec coeffs;                   // full-length fine-grid coefficients
  std::vector<Index> support;   // fine nodes allowed to be nonzero (sorted)
  double shift_used = 0.0;
  double constraint_residual = 0.0;
};

/// Per-node collection of sampled basis functions. Coefficient vectors are
/// stored restricted to the shared support to keep 2D runs in memory.
struct SnapshotSet {
  Index node = 0;
  std::vector<Index> support;
  Mat xi;                        // Q x m sample variables
  std::vector<Vec> coeffs;       // restricted, one per sample
  Vec mean;                      // restricted sample mean (zeta_0 before POD)
  std::vector<Vec> fluctuations; // coeffs - mean
  double shift_used = 0.0;

  Vec full_mean(Index n_fine) const;
  Vec full_coeffs(Index q, Index n_fine) const;
};

/// Solve the equality-constrained QP through the symmetric indefinite KKT
/// system [[Q, A^T], [A, 0]]. With a support, rows/columns outside it are
/// deleted first (dropping constraint rows that become identically zero)
/// and the solution is zero-extended. Throws DefinitenessError when the
/// factorization hits a negligible pivot.
MultiscaleBasis solve_qp(const SpMat& Q, const SpMat& A, Index node,
                         const std::optional<std::vector<Index>>& support = {});

/// Build a basis with an adaptive mass shift: tries the plain Hamiltonian
/// first and, if it is not positive definite on the support, retries with
/// shift = max(0, -v_min) + 1. The shift regularizes basis construction
/// only; time evolution always sees the true potential.
MultiscaleBasis build_with_shift(const SpMat& S, const SpMat& V, const SpMat& M,
                                 const SpMat& A, double eps, Index node,
                                 const std::optional<std::vector<Index>>& support,
                                 double v_min);

/// Default localization depth ceil(log2(L/H)).
int default_l_star(const CoarseFineMap& map);

/// Fine-node support D_{l*} for a localized solve (patch interior).
std::vector<Index> localize(const CoarseFineMap& map, Index node, int l_star);

/// Residual gradient-energy fraction ||grad phi||_{L2(D \ D_ell)} /
/// ||grad phi||_{L2(D)} for each patch layer; expects a global basis.
std::vector<std::pair<int, double>> decay_profile(const PeriodicGrid& fine,
                                                  const MultiscaleBasis& basis,
                                                  const PatchFamily& patches);

/// Family-wide mass-shift rule for snapshot generation.
///   Auto    shift by -v_min + 1 when the worst-case potential bounds cannot
///           guarantee a positive definite Hessian (the default)
///   None    never shift; solves go through the indefinite KKT system
///   Always  shift by max(0, -v_min) + 1 unconditionally
enum class ShiftPolicy { Auto, None, Always };

ShiftPolicy parse_shift_policy(const std::string& name);
std::string to_string(ShiftPolicy policy);

struct SnapshotOptions {
  int l_star = -1;           // -1 = default_l_star(map)
  bool localized = true;
  ShiftPolicy shift_policy = ShiftPolicy::Auto;
};

/// Localized bases for every coarse node across the sampled potentials.
/// A single mass shift, decided once from the worst-case potential bounds,
/// is applied to the whole family so the basis depends continuously on xi.
std::vector<SnapshotSet> generate_snapshots(const KLPotential& potential,
                                            const SamplePlan& plan, double eps,
                                            const CoarseFineMap& map,
                                            const SnapshotOptions& opts = {});

/// Streaming form of generate_snapshots: hands each node's set to the
/// visitor in node order and releases it afterwards, keeping large 2D
/// offline runs within memory.
void for_each_snapshot_set(const KLPotential& potential, const SamplePlan& plan,
                           double eps, const CoarseFineMap& map,
                           const SnapshotOptions& opts,
                           const std::function<void(SnapshotSet&&)>& visit);

/// Sample-coverage statistic behind the offline sample-count criterion:
/// the mean over fresh test draws of min_q ||v(.,xi) - v(.,xi_q)||_inf.
double offline_coverage(const KLPotential& potential, const Mat& xi_train,
                        Index n_test, std::uint64_t seed);

}  // namespace msrb
