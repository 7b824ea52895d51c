#pragma once

#include <vector>

#include "msrb/basis.hpp"
#include "msrb/common.hpp"

namespace msrb {

enum class InnerProduct { L2, H1 };

InnerProduct parse_inner_product(const std::string& name);
std::string to_string(InnerProduct ip);

/// Either keep a fixed number of modes per node or the smallest count whose
/// eigenvalue energy ratio reaches rho.
struct PodCriterion {
  static PodCriterion fixed(int m_k);
  static PodCriterion energy(double rho);

  bool use_ratio = false;
  int m_k = 1;
  double rho = 0.99;
};

/// Per-node reduced basis: the snapshot mean zeta_0 plus POD modes of the
/// fluctuations, orthonormal in the chosen inner product. The full positive
/// spectrum is kept for diagnostics.
struct ReducedBasisSet {
  Index node = 0;
  std::vector<Index> support;
  Vec zeta0;               // restricted to support
  std::vector<Vec> modes;  // restricted to support
  Vec eigenvalues;         // positive spectrum, descending
  InnerProduct inner_product = InnerProduct::L2;
  double shift_used = 0.0;

  int mode_count() const { return int(modes.size()); }
};

/// Method-of-snapshots POD of the fluctuation set. The Gram matrix is
/// weighted by M (L2) or S+M (H1) restricted to the support. All-zero
/// fluctuations yield an empty mode list.
ReducedBasisSet compute_pod(const SnapshotSet& snapshots,
                            const PodCriterion& criterion,
                            InnerProduct inner_product, const SpMat& M,
                            const SpMat* S = nullptr);

/// Partial eigenvalue energy sum_{s<=m_k} / sum_s.
double energy_ratio(const Vec& eigenvalues, int m_k);

}  // namespace msrb
