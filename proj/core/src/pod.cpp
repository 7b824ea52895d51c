#include "msrb/pod.hpp"

#include <cmath>
#include <stdexcept>

namespace msrb {

InnerProduct parse_inner_product(const std::string& name) {
  if (name == "l2" || name == "L2") return InnerProduct::L2;
  if (name == "h1" || name == "H1") return InnerProduct::H1;
  throw std::invalid_argument("unknown inner product '" + name + "'");
}

std::string to_string(InnerProduct ip) {
  return ip == InnerProduct::L2 ? "l2" : "h1";
}

PodCriterion PodCriterion::fixed(int m_k) {
  if (m_k < 0) throw std::invalid_argument("pod mode count must be >= 0");
  PodCriterion c;
  c.use_ratio = false;
  c.m_k = m_k;
  return c;
}

PodCriterion PodCriterion::energy(double rho) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("pod energy ratio must be in (0, 1]");
  PodCriterion c;
  c.use_ratio = true;
  c.rho = rho;
  return c;
}

namespace {

// Weight matrix restricted to the support, as column-gathered sparse data
// applied on the fly: y = W_loc x.
struct RestrictedWeight {
  // Per local column: list of (local row, value).
  std::vector<std::vector<std::pair<int, double>>> cols;

  Vec apply(const Vec& x) const {
    Vec y = Vec::Zero(x.size());
    for (int c = 0; c < int(cols.size()); ++c) {
      const double xc = x[c];
      if (xc == 0.0) continue;
      for (const auto& [r, v] : cols[c]) y[r] += v * xc;
    }
    return y;
  }
};

RestrictedWeight restrict_weight(const SpMat& W, const std::vector<Index>& support) {
  std::vector<int> local_of(W.rows(), -1);
  for (std::size_t i = 0; i < support.size(); ++i) local_of[support[i]] = int(i);
  RestrictedWeight rw;
  rw.cols.resize(support.size());
  for (std::size_t c = 0; c < support.size(); ++c)
    for (SpMat::InnerIterator it(W, support[c]); it; ++it) {
      const int r = local_of[it.row()];
      if (r >= 0) rw.cols[c].push_back({r, it.value()});
    }
  return rw;
}

}  // namespace

ReducedBasisSet compute_pod(const SnapshotSet& snapshots,
                            const PodCriterion& criterion,
                            InnerProduct inner_product, const SpMat& M,
                            const SpMat* S) {
  const Index q_count = Index(snapshots.fluctuations.size());
  if (q_count < 2)
    throw std::invalid_argument("POD needs at least 2 snapshots");
  if (inner_product == InnerProduct::H1 && S == nullptr)
    throw std::invalid_argument("H1 inner product needs the stiffness matrix");
  if (!criterion.use_ratio && criterion.m_k > q_count)
    throw std::invalid_argument("fixed POD mode count exceeds snapshot count");

  ReducedBasisSet out;
  out.node = snapshots.node;
  out.support = snapshots.support;
  out.zeta0 = snapshots.mean;
  out.inner_product = inner_product;
  out.shift_used = snapshots.shift_used;

  SpMat W = M;
  if (inner_product == InnerProduct::H1) W = *S + M;
  const RestrictedWeight rw = restrict_weight(W, snapshots.support);

  // Gram matrix of the fluctuations in the X inner product.
  std::vector<Vec> weighted(q_count);
  for (Index q = 0; q < q_count; ++q)
    weighted[q] = rw.apply(snapshots.fluctuations[q]);
  Mat gram(q_count, q_count);
  for (Index p = 0; p < q_count; ++p)
    for (Index q = p; q < q_count; ++q)
      gram(p, q) = gram(q, p) = snapshots.fluctuations[p].dot(weighted[q]);

  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("POD Gram eigensolve failed");

  // Ascending from Eigen; keep the strictly positive part, descending.
  const double lambda_max = std::max(0.0, eig.eigenvalues().maxCoeff());
  const double floor = lambda_max * 1e-13;
  std::vector<Index> keep;
  for (Index i = q_count - 1; i >= 0; --i) {
    if (eig.eigenvalues()[i] <= floor) break;
    keep.push_back(i);
  }

  out.eigenvalues = Vec(Index(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    out.eigenvalues[Index(k)] = eig.eigenvalues()[keep[k]];

  int m_k = 0;
  if (criterion.use_ratio) {
    const double total = out.eigenvalues.sum();
    double acc = 0.0;
    for (Index i = 0; i < out.eigenvalues.size(); ++i) {
      acc += out.eigenvalues[i];
      m_k = int(i) + 1;
      if (acc >= criterion.rho * total) break;
    }
    if (total <= 0.0) m_k = 0;
  } else {
    m_k = std::min<int>(criterion.m_k, int(keep.size()));
  }

  out.modes.reserve(m_k);
  for (int l = 0; l < m_k; ++l) {
    const Vec u = eig.eigenvectors().col(keep[l]);
    Vec mode = Vec::Zero(snapshots.mean.size());
    for (Index q = 0; q < q_count; ++q) mode += u[q] * snapshots.fluctuations[q];
    mode /= std::sqrt(out.eigenvalues[l]);
    out.modes.push_back(std::move(mode));
  }
  return out;
}

double energy_ratio(const Vec& eigenvalues, int m_k) {
  if (m_k < 0 || m_k > eigenvalues.size())
    throw std::invalid_argument("energy_ratio: m_k out of range");
  const double total = eigenvalues.sum();
  if (total <= 0.0) return m_k > 0 ? 1.0 : 0.0;
  return eigenvalues.head(m_k).sum() / total;
}

}  // namespace msrb
