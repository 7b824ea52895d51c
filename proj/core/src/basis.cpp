#include "msrb/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace msrb {

Vec SnapshotSet::full_mean(Index n_fine) const {
  Vec out = Vec::Zero(n_fine);
  for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = mean[i];
  return out;
}

Vec SnapshotSet::full_coeffs(Index q, Index n_fine) const {
  Vec out = Vec::Zero(n_fine);
  for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = coeffs[q][i];
  return out;
}

namespace {

constexpr Index kDenseKktLimit = 2048;

struct LocalConstraints {
  std::vector<Index> rows;  // retained coarse constraint rows, ascending
  Mat A;                    // rows.size() x support.size()
};

// Columns of A over the support; constraint rows that lose every entry are
// dropped (their right-hand side is zero by construction).
LocalConstraints restrict_constraints(const SpMat& A,
                                      const std::vector<Index>& support,
                                      const std::vector<int>& local_of) {
  const Index s = Index(support.size());
  std::vector<std::vector<std::pair<Index, double>>> per_row(A.rows());
  for (Index loc = 0; loc < s; ++loc) {
    const Index col = support[loc];
    for (SpMat::InnerIterator it(A, col); it; ++it)
      per_row[it.row()].push_back({loc, it.value()});
  }
  LocalConstraints out;
  for (Index r = 0; r < A.rows(); ++r)
    if (!per_row[r].empty()) out.rows.push_back(r);
  out.A = Mat::Zero(Index(out.rows.size()), s);
  for (Index k = 0; k < Index(out.rows.size()); ++k)
    for (const auto& [loc, val] : per_row[out.rows[k]]) out.A(k, loc) = val;
  (void)local_of;
  return out;
}

Mat restrict_dense(const SpMat& Q, const std::vector<Index>& support,
                   const std::vector<int>& local_of) {
  const Index s = Index(support.size());
  Mat out = Mat::Zero(s, s);
  for (Index loc = 0; loc < s; ++loc) {
    const Index col = support[loc];
    for (SpMat::InnerIterator it(Q, col); it; ++it) {
      const int row_loc = local_of[it.row()];
      if (row_loc >= 0) out(row_loc, loc) = it.value();
    }
  }
  return out;
}

struct KktSolution {
  Vec c;
  double residual;
};

KktSolution solve_kkt_dense(const Mat& Q, const Mat& A, const Vec& b) {
  const Index s = Q.rows(), c = A.rows();
  Mat kkt = Mat::Zero(s + c, s + c);
  kkt.topLeftCorner(s, s) = Q;
  kkt.topRightCorner(s, c) = A.transpose();
  kkt.bottomLeftCorner(c, s) = A;
  Vec rhs = Vec::Zero(s + c);
  rhs.tail(c) = b;

  Eigen::PartialPivLU<Mat> lu(kkt);
  const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
  const double smallest = diag.minCoeff();
  if (!(smallest > diag.maxCoeff() * 1e-14))
    throw DefinitenessError("KKT factorization is numerically singular", smallest);
  Vec sol = lu.solve(rhs);
  // One refinement pass keeps the constraint residual at roundoff level.
  sol += lu.solve(rhs - kkt * sol);

  KktSolution out;
  out.c = sol.head(s);
  out.residual = (A * out.c - b).cwiseAbs().maxCoeff();
  return out;
}

KktSolution solve_kkt_sparse(const SpMat& Q, const Mat& A, const Vec& b) {
  const Index s = Q.rows(), c = A.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(Q.nonZeros() + 2 * std::size_t(A.size()));
  for (Index col = 0; col < s; ++col)
    for (SpMat::InnerIterator it(Q, col); it; ++it)
      trips.emplace_back(it.row(), col, it.value());
  for (Index r = 0; r < c; ++r)
    for (Index col = 0; col < s; ++col)
      if (A(r, col) != 0.0) {
        trips.emplace_back(s + r, col, A(r, col));
        trips.emplace_back(col, s + r, A(r, col));
      }
  SpMat kkt(s + c, s + c);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();

  Eigen::SparseLU<SpMat> lu(kkt);
  if (lu.info() != Eigen::Success)
    throw DefinitenessError("sparse KKT factorization failed", 0.0);
  Vec rhs = Vec::Zero(s + c);
  rhs.tail(c) = b;
  Vec sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);

  KktSolution out;
  out.c = sol.head(s);
  out.residual = (A * out.c - b).cwiseAbs().maxCoeff();
  return out;
}

std::vector<Index> full_support(Index n) {
  std::vector<Index> s(n);
  for (Index i = 0; i < n; ++i) s[i] = i;
  return s;
}

}  // namespace

ShiftPolicy parse_shift_policy(const std::string& name) {
  if (name == "auto") return ShiftPolicy::Auto;
  if (name == "none") return ShiftPolicy::None;
  if (name == "always") return ShiftPolicy::Always;
  throw std::invalid_argument("unknown shift policy '" + name + "'");
}

std::string to_string(ShiftPolicy policy) {
  switch (policy) {
    case ShiftPolicy::Auto: return "auto";
    case ShiftPolicy::None: return "none";
    case ShiftPolicy::Always: return "always";
  }
  return "?";
}

MultiscaleBasis solve_qp(const SpMat& Q, const SpMat& A, Index node,
                         const std::optional<std::vector<Index>>& support) {
  if (Q.rows() != Q.cols() || A.cols() != Q.rows())
    throw std::invalid_argument("solve_qp: inconsistent Q/A dimensions");
  if (node < 0 || node >= A.rows())
    throw std::out_of_range("solve_qp: constraint node out of range");

  const std::vector<Index> supp = support ? *support : full_support(Q.rows());
  std::vector<int> local_of(Q.rows(), -1);
  for (std::size_t i = 0; i < supp.size(); ++i) local_of[supp[i]] = int(i);

  const LocalConstraints lc = restrict_constraints(A, supp, local_of);
  const auto row_it = std::lower_bound(lc.rows.begin(), lc.rows.end(), node);
  if (row_it == lc.rows.end() || *row_it != node)
    throw std::invalid_argument("solve_qp: node constraint vanishes on the support");
  Vec b = Vec::Zero(Index(lc.rows.size()));
  b[row_it - lc.rows.begin()] = 1.0;

  KktSolution sol;
  if (Index(supp.size() + lc.rows.size()) <= kDenseKktLimit) {
    sol = solve_kkt_dense(restrict_dense(Q, supp, local_of), lc.A, b);
  } else {
    // Keep Q sparse above the dense cutoff; the constraint block is small.
    SpMat q_loc(Index(supp.size()), Index(supp.size()));
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < supp.size(); ++i)
      for (SpMat::InnerIterator it(Q, supp[i]); it; ++it) {
        const int r = local_of[it.row()];
        if (r >= 0) trips.emplace_back(r, Index(i), it.value());
      }
    q_loc.setFromTriplets(trips.begin(), trips.end());
    sol = solve_kkt_sparse(q_loc, lc.A, b);
  }

  MultiscaleBasis out;
  out.node = node;
  out.support = supp;
  out.constraint_residual = sol.residual;
  out.coeffs = Vec::Zero(Q.rows());
  for (std::size_t i = 0; i < supp.size(); ++i) out.coeffs[supp[i]] = sol.c[i];
  return out;
}

MultiscaleBasis build_with_shift(const SpMat& S, const SpMat& V, const SpMat& M,
                                 const SpMat& A, double eps, Index node,
                                 const std::optional<std::vector<Index>>& support,
                                 double v_min) {
  const SpMat Q0 = assemble_Q(S, V, eps, 0.0, M);

  const std::vector<Index> supp = support ? *support : full_support(Q0.rows());
  std::vector<int> local_of(Q0.rows(), -1);
  for (std::size_t i = 0; i < supp.size(); ++i) local_of[supp[i]] = int(i);

  bool pd = false;
  if (Index(supp.size()) <= kDenseKktLimit) {
    Eigen::LLT<Mat> llt(restrict_dense(Q0, supp, local_of));
    pd = llt.info() == Eigen::Success;
  } else {
    SpMat q_loc(Index(supp.size()), Index(supp.size()));
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < supp.size(); ++i)
      for (SpMat::InnerIterator it(Q0, supp[i]); it; ++it) {
        const int r = local_of[it.row()];
        if (r >= 0) trips.emplace_back(r, Index(i), it.value());
      }
    q_loc.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLLT<SpMat> llt(q_loc);
    pd = llt.info() == Eigen::Success;
  }

  if (pd) {
    try {
      MultiscaleBasis b = solve_qp(Q0, A, node, support);
      b.shift_used = 0.0;
      return b;
    } catch (const DefinitenessError&) {
      // fall through to the shifted solve
    }
  }

  const double shift = std::max(0.0, -v_min) + 1.0;
  MultiscaleBasis b = solve_qp(assemble_Q(S, V, eps, shift, M), A, node, support);
  b.shift_used = shift;
  return b;
}

int default_l_star(const CoarseFineMap& map) {
  double lmax = map.coarse.length(0);
  double hmax = map.coarse.spacing(0);
  if (map.coarse.dim() == 2) {
    lmax = std::max(lmax, map.coarse.length(1));
    hmax = std::max(hmax, map.coarse.spacing(1));
  }
  return int(std::ceil(std::log2(lmax / hmax)));
}

std::vector<Index> localize(const CoarseFineMap& map, Index node, int l_star) {
  if (l_star < 1) throw std::invalid_argument("l_star must be >= 1");
  return PatchFamily(map, node, l_star).interior_fine_nodes(l_star);
}

std::vector<std::pair<int, double>> decay_profile(const PeriodicGrid& fine,
                                                  const MultiscaleBasis& basis,
                                                  const PatchFamily& patches) {
  if (basis.coeffs.size() != fine.node_count())
    throw std::invalid_argument("decay_profile: basis is not on this grid");
  const Mat ke = element_stiffness(fine);
  const int k = fine.dim() == 1 ? 2 : 4;
  const int ny = fine.dim() == 2 ? fine.cells(1) : 1;
  const int rx = patches.map().refinement[0];
  const int ry = fine.dim() == 2 ? patches.map().refinement[1] : 1;

  // Gradient energy per fine cell.
  Mat cell_energy(fine.cells(0), ny);
  Vec local(k);
  for (int cy = 0; cy < ny; ++cy)
    for (int cx = 0; cx < fine.cells(0); ++cx) {
      const auto nodes = cell_nodes(fine, cx, cy);
      for (int a = 0; a < k; ++a) local[a] = basis.coeffs[nodes[a]];
      cell_energy(cx, cy) = local.dot(ke * local);
    }
  const double total = cell_energy.sum();

  std::vector<std::pair<int, double>> out;
  out.reserve(patches.max_layer() + 1);
  for (int ell = 0; ell <= patches.max_layer(); ++ell) {
    double outside = 0.0;
    for (int cy = 0; cy < ny; ++cy)
      for (int cx = 0; cx < fine.cells(0); ++cx)
        if (!patches.contains_cell(ell, cx / rx, cy / ry))
          outside += cell_energy(cx, cy);
    out.push_back({ell, total > 0.0 ? std::sqrt(std::max(0.0, outside) / total) : 0.0});
  }
  return out;
}

namespace {

// Sample-independent data for one node's localized solves. The family
// shift keeps the local Hessian positive definite, so each sample needs a
// Cholesky refactorization of a fixed sparsity pattern plus a small Schur
// complement on the retained constraints; this agrees with the KKT solve
// (see the unit tests) at a fraction of its cost.
struct NodeWorkspace {
  std::vector<Index> support;
  LocalConstraints lc;
  Vec b;
  Index b_row = 0;
  SpMat q_loc;             // pattern shared by every sample
  Vec const_values;        // (eps^2/2) S + shift M part of q_loc
  Mat at_dense;            // A_loc^T as dense right-hand sides
  std::vector<std::array<Index, 4>> cell_global_ids;
  std::vector<std::array<int, 4>> cell_support_ids;
  std::vector<std::array<int, 16>> cell_offsets;  // into q_loc values
  std::unique_ptr<Eigen::SimplicialLLT<SpMat>> llt;
  bool use_kkt = false;  // indefinite Hessian: no Cholesky route
};

NodeWorkspace make_node_workspace(const CoarseFineMap& map, const SpMat& A,
                                  Index node, int l_star, double eps,
                                  double shift, std::vector<int>& local_of) {
  const PeriodicGrid& fine = map.fine;
  NodeWorkspace w;
  PatchFamily patches(map, node, l_star);
  w.support = patches.interior_fine_nodes(l_star);
  for (std::size_t i = 0; i < w.support.size(); ++i)
    local_of[w.support[i]] = int(i);

  w.lc = restrict_constraints(A, w.support, local_of);
  const auto row_it = std::lower_bound(w.lc.rows.begin(), w.lc.rows.end(), node);
  if (row_it == w.lc.rows.end() || *row_it != node)
    throw std::logic_error("node constraint lost its support");
  w.b_row = row_it - w.lc.rows.begin();
  w.b = Vec::Zero(Index(w.lc.rows.size()));
  w.b[w.b_row] = 1.0;
  w.at_dense = w.lc.A.transpose();

  // Fine cells covered by the patch, with local scatter indices.
  const int k = fine.dim() == 1 ? 2 : 4;
  const int rx = map.refinement[0];
  const int ry = fine.dim() == 2 ? map.refinement[1] : 1;
  for (const auto& cc : patches.cells(l_star)) {
    for (int fy = 0; fy < ry; ++fy)
      for (int fx = 0; fx < rx; ++fx) {
        const int cx = fine.wrap(cc[0] * rx + fx, 0);
        const int cy = fine.dim() == 2 ? fine.wrap(cc[1] * ry + fy, 1) : 0;
        const auto nodes = cell_nodes(fine, cx, cy);
        std::array<int, 4> loc{-1, -1, -1, -1};
        for (int a = 0; a < k; ++a) loc[a] = local_of[nodes[a]];
        w.cell_support_ids.push_back(loc);
        w.cell_global_ids.push_back(nodes);
      }
  }

  // Constant part (kinetic + shift) of the local Hessian, which also fixes
  // the sparsity pattern used by every sample.
  const Index s = Index(w.support.size());
  const Mat ke = 0.5 * eps * eps * element_stiffness(fine) +
                 shift * element_mass(fine);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(w.cell_support_ids.size() * k * k);
  for (const auto& loc : w.cell_support_ids)
    for (int a = 0; a < k; ++a) {
      if (loc[a] < 0) continue;
      for (int bq = 0; bq < k; ++bq)
        if (loc[bq] >= 0) trips.emplace_back(loc[a], loc[bq], ke(a, bq));
    }
  w.q_loc = SpMat(s, s);
  w.q_loc.setFromTriplets(trips.begin(), trips.end());
  w.q_loc.makeCompressed();
  w.const_values = Eigen::Map<const Vec>(w.q_loc.valuePtr(), w.q_loc.nonZeros());

  // Offset of each element entry inside the compressed value array.
  using StorageIndex = SpMat::StorageIndex;
  const auto offset_of = [&](int row, int col) {
    const StorageIndex* inner = w.q_loc.innerIndexPtr();
    const StorageIndex* outer = w.q_loc.outerIndexPtr();
    const StorageIndex* lo = inner + outer[col];
    const StorageIndex* hi = inner + outer[col + 1];
    const StorageIndex* it = std::lower_bound(lo, hi, StorageIndex(row));
    return int(it - inner);
  };
  w.cell_offsets.reserve(w.cell_support_ids.size());
  for (const auto& loc : w.cell_support_ids) {
    std::array<int, 16> offs;
    offs.fill(-1);
    for (int a = 0; a < k; ++a) {
      if (loc[a] < 0) continue;
      for (int bq = 0; bq < k; ++bq)
        if (loc[bq] >= 0) offs[a * 4 + bq] = offset_of(loc[a], loc[bq]);
    }
    w.cell_offsets.push_back(offs);
  }

  w.llt = std::make_unique<Eigen::SimplicialLLT<SpMat>>();
  w.llt->analyzePattern(w.q_loc);

  for (Index i : w.support) local_of[i] = -1;
  return w;
}

// Basis coefficients on the support for one sample, by the range-space
// route c = Q^{-1} A^T (A Q^{-1} A^T)^{-1} b on the shifted (PD) Hessian.
Vec solve_node_sample(NodeWorkspace& w, const PeriodicGrid& fine,
                      const KLPotential& potential, const Vec& xi) {
  const int k = fine.dim() == 1 ? 2 : 4;

  double* values = w.q_loc.valuePtr();
  std::copy(w.const_values.data(), w.const_values.data() + w.const_values.size(),
            values);
  Vec v_local(k);
  for (std::size_t cell = 0; cell < w.cell_global_ids.size(); ++cell) {
    const auto& gid = w.cell_global_ids[cell];
    const auto& offs = w.cell_offsets[cell];
    for (int a = 0; a < k; ++a) {
      double v = potential.mean[gid[a]];
      for (int j = 0; j < potential.m; ++j)
        v += xi[j] * potential.amplitudes[j] * potential.modes[j][gid[a]];
      v_local[a] = v;
    }
    const Mat ve = element_potential(fine, v_local);
    for (int a = 0; a < k; ++a)
      for (int bq = 0; bq < k; ++bq)
        if (offs[a * 4 + bq] >= 0) values[offs[a * 4 + bq]] += ve(a, bq);
  }

  if (w.use_kkt) {
    // Unshifted, possibly indefinite Hessian: fall back to the saddle solve.
    const Index s = Index(w.support.size());
    const Index c = Index(w.lc.rows.size());
    Mat kkt = Mat::Zero(s + c, s + c);
    kkt.topLeftCorner(s, s) = Mat(w.q_loc);
    kkt.topRightCorner(s, c) = w.lc.A.transpose();
    kkt.bottomLeftCorner(c, s) = w.lc.A;
    Vec rhs = Vec::Zero(s + c);
    rhs.tail(c) = w.b;
    Eigen::PartialPivLU<Mat> lu(kkt);
    const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
    if (!(diag.minCoeff() > diag.maxCoeff() * 1e-14))
      throw DefinitenessError("KKT factorization is numerically singular",
                              diag.minCoeff());
    Vec sol = lu.solve(rhs);
    sol += lu.solve(rhs - kkt * sol);
    Vec ck = sol.head(s);
    const double res_k = (w.lc.A * ck - w.b).cwiseAbs().maxCoeff();
    if (res_k > 1e-8)
      throw std::runtime_error("localized QP constraint residual " +
                               format_double(res_k));
    return ck;
  }

  w.llt->factorize(w.q_loc);
  if (w.llt->info() != Eigen::Success)
    throw DefinitenessError("shifted local Hessian lost positive definiteness",
                            0.0);
  const Mat x = w.llt->solve(w.at_dense);
  const Mat gram = w.lc.A * x;
  Eigen::LDLT<Mat> gram_ldlt(gram);
  if (gram_ldlt.info() != Eigen::Success)
    throw DefinitenessError("constraint Gram matrix is singular", 0.0);
  Vec y = gram_ldlt.solve(w.b);
  y += gram_ldlt.solve(w.b - gram * y);
  Vec c = x * y;

  const double residual = (w.lc.A * c - w.b).cwiseAbs().maxCoeff();
  if (residual > 1e-8)
    throw std::runtime_error("localized QP constraint residual " +
                             format_double(residual));
  return c;
}

}  // namespace

void for_each_snapshot_set(const KLPotential& potential, const SamplePlan& plan,
                           double eps, const CoarseFineMap& map,
                           const SnapshotOptions& opts,
                           const std::function<void(SnapshotSet&&)>& visit) {
  if (plan.n < 2)
    throw std::invalid_argument("offline stage needs at least 2 samples");
  if (plan.m != potential.m)
    throw std::invalid_argument("sample plan dimension must match the potential");

  const PeriodicGrid& fine = map.fine;
  const Index n_h = fine.node_count();
  const Index n_H = map.coarse.node_count();
  const Mat xi = to_xi(generate(plan));

  // One mass shift for the whole family so the sampled bases depend
  // continuously on xi. Auto shifts exactly when the worst-case potential
  // bounds cannot certify a positive definite Hessian.
  const PotentialBounds vb = bounds(potential);
  const double auto_shift = vb.v_min > 0.0 ? 0.0 : -vb.v_min + 1.0;
  double shift = auto_shift;
  if (opts.shift_policy == ShiftPolicy::None) shift = 0.0;
  if (opts.shift_policy == ShiftPolicy::Always)
    shift = std::max(0.0, -vb.v_min) + 1.0;
  const bool hessian_pd_certified = shift >= auto_shift;

  const int l_star = opts.l_star < 0 ? default_l_star(map) : opts.l_star;
  const SpMat A = assemble_A(map);

  if (!opts.localized) {
    // Global solves: the whole-domain KKT system is factored once per
    // sample and reused for every node's right-hand side.
    const SpMat S = assemble_S(fine);
    const SpMat M = assemble_M(fine);
    const Mat Ad = Mat(A);
    std::vector<SnapshotSet> sets(n_H);
    for (Index node = 0; node < n_H; ++node) {
      sets[node].node = node;
      sets[node].support = full_support(n_h);
      sets[node].xi = xi;
      sets[node].shift_used = shift;
    }
    const Index kkt_dim = n_h + n_H;
    const bool dense_path = kkt_dim <= 4096;
    for (Index q = 0; q < plan.n; ++q) {
      const PotentialSample samp = sample(potential, xi.row(q).transpose());
      const SpMat Q = assemble_Q(S, assemble_V(fine, samp), eps, shift, M);

      const auto check_and_store = [&](Index node, Vec&& c) {
        Vec resid = Ad * c;
        resid[node] -= 1.0;
        if (resid.cwiseAbs().maxCoeff() > 1e-8)
          throw std::runtime_error("global QP constraint residual at node " +
                                   std::to_string(node) + ", sample " +
                                   std::to_string(q));
        sets[node].coeffs.push_back(std::move(c));
      };

      if (dense_path) {
        Mat kkt = Mat::Zero(kkt_dim, kkt_dim);
        kkt.topLeftCorner(n_h, n_h) = Mat(Q);
        kkt.topRightCorner(n_h, n_H) = Ad.transpose();
        kkt.bottomLeftCorner(n_H, n_h) = Ad;
        Eigen::PartialPivLU<Mat> lu(kkt);
        const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
        if (!(diag.minCoeff() > diag.maxCoeff() * 1e-14))
          throw DefinitenessError(
              "global KKT factorization is singular at sample " + std::to_string(q),
              diag.minCoeff());
        Vec rhs = Vec::Zero(kkt_dim);
        for (Index node = 0; node < n_H; ++node) {
          rhs.setZero();
          rhs[n_h + node] = 1.0;
          Vec sol = lu.solve(rhs);
          sol += lu.solve(rhs - kkt * sol);
          check_and_store(node, Vec(sol.head(n_h)));
        }
      } else {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(Q.nonZeros() + 2 * A.nonZeros());
        for (Index col = 0; col < n_h; ++col)
          for (SpMat::InnerIterator it(Q, col); it; ++it)
            trips.emplace_back(it.row(), col, it.value());
        for (Index col = 0; col < n_h; ++col)
          for (SpMat::InnerIterator it(A, col); it; ++it) {
            trips.emplace_back(n_h + it.row(), col, it.value());
            trips.emplace_back(col, n_h + it.row(), it.value());
          }
        SpMat kkt(kkt_dim, kkt_dim);
        kkt.setFromTriplets(trips.begin(), trips.end());
        kkt.makeCompressed();
        Eigen::SparseLU<SpMat> lu(kkt);
        if (lu.info() != Eigen::Success)
          throw DefinitenessError(
              "global sparse KKT factorization failed at sample " + std::to_string(q),
              0.0);
        Vec rhs = Vec::Zero(kkt_dim);
        for (Index node = 0; node < n_H; ++node) {
          rhs.setZero();
          rhs[n_h + node] = 1.0;
          Vec sol = lu.solve(rhs);
          sol += lu.solve(rhs - kkt * sol);
          check_and_store(node, Vec(sol.head(n_h)));
        }
      }
    }
    for (Index node = 0; node < n_H; ++node) {
      sets[node].mean = pairwise_mean(sets[node].coeffs);
      for (const Vec& c : sets[node].coeffs)
        sets[node].fluctuations.push_back(c - sets[node].mean);
      visit(std::move(sets[node]));
    }
    return;
  }

  std::vector<int> local_of(n_h, -1);
  for (Index node = 0; node < n_H; ++node) {
    NodeWorkspace w =
        make_node_workspace(map, A, node, l_star, eps, shift, local_of);
    w.use_kkt = !hessian_pd_certified;
    SnapshotSet set;
    set.node = node;
    set.support = w.support;
    set.xi = xi;
    set.shift_used = shift;
    set.coeffs.reserve(plan.n);
    for (Index q = 0; q < plan.n; ++q) {
      try {
        set.coeffs.push_back(
            solve_node_sample(w, fine, potential, xi.row(q).transpose()));
      } catch (const std::exception& e) {
        throw std::runtime_error("offline solve failed at node " +
                                 std::to_string(node) + ", sample " +
                                 std::to_string(q) + ": " + e.what());
      }
    }
    set.mean = pairwise_mean(set.coeffs);
    set.fluctuations.reserve(plan.n);
    for (const Vec& c : set.coeffs) set.fluctuations.push_back(c - set.mean);
    visit(std::move(set));
  }
}

std::vector<SnapshotSet> generate_snapshots(const KLPotential& potential,
                                            const SamplePlan& plan, double eps,
                                            const CoarseFineMap& map,
                                            const SnapshotOptions& opts) {
  std::vector<SnapshotSet> out;
  out.reserve(map.coarse.node_count());
  for_each_snapshot_set(potential, plan, eps, map, opts,
                        [&](SnapshotSet&& s) { out.push_back(std::move(s)); });
  return out;
}

double offline_coverage(const KLPotential& potential, const Mat& xi_train,
                        Index n_test, std::uint64_t seed) {
  if (xi_train.cols() != potential.m)
    throw std::invalid_argument("offline_coverage: xi dimension mismatch");
  SamplePlan plan;
  plan.method = SampleMethod::MonteCarlo;
  plan.n = n_test;
  plan.m = potential.m;
  plan.seed = seed;
  const Mat xi_test = to_xi(generate(plan));

  // Fluctuation part of each training sample.
  std::vector<Vec> train(xi_train.rows());
  for (Index q = 0; q < xi_train.rows(); ++q) {
    Vec v = Vec::Zero(potential.mean.size());
    for (int j = 0; j < potential.m; ++j)
      v += xi_train(q, j) * potential.amplitudes[j] * potential.modes[j];
    train[q] = v;
  }

  double acc = 0.0;
  Vec v_test(potential.mean.size());
  for (Index t = 0; t < n_test; ++t) {
    v_test.setZero();
    for (int j = 0; j < potential.m; ++j)
      v_test += xi_test(t, j) * potential.amplitudes[j] * potential.modes[j];
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v_q : train)
      best = std::min(best, (v_test - v_q).cwiseAbs().maxCoeff());
    acc += best;
  }
  return acc / double(n_test);
}

}  // namespace msrb
