#include "msrb/evolve.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace msrb {

namespace {

SpMat reduced_triple_product(const SpMat& z, const SpMat& fine_op) {
  SpMat zt = z.transpose();
  SpMat out = zt * (fine_op * z);
  out.makeCompressed();
  return out;
}

}  // namespace

void GalerkinSystem::finalize(const SpMat& fine_S, const SpMat& fine_M) {
  s_r_ = reduced_triple_product(z_, fine_S);
  m_r_ = reduced_triple_product(z_, fine_M);
  fine_m_ = fine_M;

  mass_solver_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  mass_solver_->compute(m_r_);
  Index worst = 0;
  bool deficient = mass_solver_->info() != Eigen::Success;
  if (!deficient) {
    const Vec d = mass_solver_->vectorD();
    Index permuted = 0;
    const double dmin = d.minCoeff(&permuted);
    deficient = !(dmin > d.maxCoeff() * 1e-13);  // catches NaN pivots too
    // pivots live in the fill-reducing ordering; map back to a column
    worst = mass_solver_->permutationPinv().indices()[permuted];
  }
  if (deficient) {
    // Look for a collinear pair inside one node block, the usual culprit.
    if (!col_node_.empty()) {
      for (Index i = 0; i + 1 < m_r_.rows(); ++i)
        for (Index j = i + 1; j < m_r_.rows() && col_node_[i] == col_node_[j]; ++j) {
          const double mii = m_r_.coeff(i, i), mjj = m_r_.coeff(j, j);
          const double mij = m_r_.coeff(i, j);
          if (mii > 0 && mjj > 0 &&
              std::abs(mij) / std::sqrt(mii * mjj) > 1.0 - 1e-10) {
            worst = i;
            break;
          }
        }
    }
    std::string where = is_fine_ ? "fine node " + std::to_string(worst)
                                 : "node " + std::to_string(col_node_.empty()
                                                                ? worst
                                                                : col_node_[worst]);
    throw std::runtime_error(
        "reduced mass matrix is rank deficient (collinear reduced functions) at " +
        where);
  }
}

GalerkinSystem GalerkinSystem::fine(const PeriodicGrid& grid,
                                    const KLPotential& potential, double eps) {
  if (potential.mean.size() != grid.node_count())
    throw std::invalid_argument("potential lives on a different grid");
  GalerkinSystem sys;
  sys.is_fine_ = true;
  sys.eps_ = eps;
  sys.fine_nodes_ = grid.node_count();
  sys.z_ = SpMat(grid.node_count(), grid.node_count());
  sys.z_.setIdentity();

  const SpMat S = assemble_S(grid);
  const SpMat M = assemble_M(grid);
  sys.v_bar_r_ = assemble_V(grid, potential.mean);
  sys.v_mode_r_.reserve(potential.m);
  for (int j = 0; j < potential.m; ++j)
    sys.v_mode_r_.push_back(
        assemble_V(grid, Vec(potential.amplitudes[j] * potential.modes[j])));
  sys.finalize(S, M);
  return sys;
}

GalerkinSystem GalerkinSystem::reduced(const std::vector<ReducedBasisSet>& sets,
                                       const PeriodicGrid& fine_grid,
                                       const KLPotential& potential, double eps) {
  if (sets.empty()) throw std::invalid_argument("no reduced basis sets");
  GalerkinSystem sys;
  sys.is_fine_ = false;
  sys.eps_ = eps;
  sys.fine_nodes_ = fine_grid.node_count();

  Index n = 0;
  for (const auto& set : sets) n += 1 + set.mode_count();

  std::vector<Eigen::Triplet<double>> trips;
  Index col = 0;
  sys.col_node_.assign(std::size_t(n), 0);
  for (const auto& set : sets) {
    sys.col_node_[col] = set.node;
    for (std::size_t i = 0; i < set.support.size(); ++i)
      if (set.zeta0[Index(i)] != 0.0)
        trips.emplace_back(set.support[i], col, set.zeta0[Index(i)]);
    ++col;
    for (const Vec& mode : set.modes) {
      sys.col_node_[col] = set.node;
      for (std::size_t i = 0; i < set.support.size(); ++i)
        if (mode[Index(i)] != 0.0)
          trips.emplace_back(set.support[i], col, mode[Index(i)]);
      ++col;
    }
  }
  sys.z_ = SpMat(fine_grid.node_count(), n);
  sys.z_.setFromTriplets(trips.begin(), trips.end());
  sys.z_.makeCompressed();

  const SpMat S = assemble_S(fine_grid);
  const SpMat M = assemble_M(fine_grid);
  sys.v_bar_r_ = reduced_triple_product(sys.z_, assemble_V(fine_grid, potential.mean));
  sys.v_mode_r_.reserve(potential.m);
  for (int j = 0; j < potential.m; ++j)
    sys.v_mode_r_.push_back(reduced_triple_product(
        sys.z_, assemble_V(fine_grid, Vec(potential.amplitudes[j] * potential.modes[j]))));
  sys.finalize(S, M);
  return sys;
}

SpMat GalerkinSystem::potential_matrix(const Vec& xi) const {
  if (xi.size() != Index(v_mode_r_.size()))
    throw std::invalid_argument("xi dimension mismatch in potential matrix");
  SpMat v = v_bar_r_;
  for (Index j = 0; j < xi.size(); ++j) v += xi[j] * v_mode_r_[j];
  v.makeCompressed();
  return v;
}

SpMat GalerkinSystem::potential_matrix(const PotentialSample& sample) const {
  return potential_matrix(sample.xi);
}

SpMat GalerkinSystem::hamiltonian(const Vec& xi) const {
  SpMat a = (0.5 * eps_ * eps_) * s_r_ + potential_matrix(xi);
  a.makeCompressed();
  return a;
}

WaveState GalerkinSystem::project_initial(const CVec& psi_fine) const {
  if (psi_fine.size() != fine_nodes_)
    throw std::invalid_argument("initial data is not on the fine grid");
  WaveState s;
  s.t = 0.0;
  if (is_fine_) {
    s.c = psi_fine;
    return s;
  }
  const CVec rhs = z_.transpose().cast<Complex>() * (fine_m_.cast<Complex>() * psi_fine);
  const Vec re = mass_solver_->solve(rhs.real());
  const Vec im = mass_solver_->solve(rhs.imag());
  s.c = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
  return s;
}

WaveState GalerkinSystem::project_initial(const Vec& psi_fine) const {
  return project_initial(CVec(psi_fine.cast<Complex>()));
}

CVec GalerkinSystem::reconstruct(const CVec& c) const {
  if (is_fine_) return c;
  return z_.cast<Complex>() * c;
}

double GalerkinSystem::m_norm(const CVec& c) const {
  const Complex q = c.dot(m_r_.cast<Complex>() * c);
  return std::sqrt(std::max(0.0, q.real()));
}

CrankNicolson::CrankNicolson(const GalerkinSystem& system, const Vec& xi,
                             double dt)
    : dt_(dt) {
  if (!(dt != 0.0)) throw std::invalid_argument("time step must be nonzero");
  const double mu = dt / (2.0 * system.eps());
  const CSpMat a = system.hamiltonian(xi).cast<Complex>();
  const CSpMat m = system.mass().cast<Complex>();
  CSpMat lhs = m + Complex(0, mu) * a;
  rhs_op_ = m - Complex(0, mu) * a;
  lhs.makeCompressed();
  rhs_op_.makeCompressed();
  solver_ = std::make_shared<Eigen::SparseLU<CSpMat>>();
  solver_->compute(lhs);
  if (solver_->info() != Eigen::Success)
    throw std::runtime_error("Crank-Nicolson system factorization failed");
}

WaveState CrankNicolson::step(const WaveState& state) const {
  WaveState next;
  next.c = solver_->solve(rhs_op_ * state.c);
  next.t = state.t + dt_;
  return next;
}

WaveState step_crank_nicolson(const GalerkinSystem& system, const Vec& xi,
                              const WaveState& state, double dt) {
  return CrankNicolson(system, xi, dt).step(state);
}

namespace {

struct StepPlan {
  Index n_full;
  double remainder;
};

StepPlan plan_steps(double T, double dt) {
  if (!(T >= 0.0)) throw std::invalid_argument("final time must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const double raw = T / dt;
  Index n_full = Index(std::floor(raw + 1e-9));
  double rem = T - double(n_full) * dt;
  if (rem < dt * 1e-9) rem = 0.0;
  return {n_full, rem};
}

}  // namespace

WaveState evolve(const GalerkinSystem& system, const Vec& xi,
                 const WaveState& initial, double T, double dt) {
  const StepPlan plan = plan_steps(T, dt);
  WaveState state = initial;
  if (plan.n_full > 0) {
    CrankNicolson cn(system, xi, dt);
    for (Index k = 0; k < plan.n_full; ++k) state = cn.step(state);
  }
  if (plan.remainder > 0.0)
    state = CrankNicolson(system, xi, plan.remainder).step(state);
  state.t = initial.t + T;
  return state;
}

WaveState evolve(const GalerkinSystem& system, const Vec& xi, const Vec& psi_in,
                 double T, double dt) {
  return evolve(system, xi, system.project_initial(psi_in), T, dt);
}

std::vector<WaveState> evolve_trajectory(const GalerkinSystem& system,
                                         const Vec& xi, const Vec& psi_in,
                                         double T, double dt, int n_outputs) {
  if (n_outputs < 1) throw std::invalid_argument("need at least one output");
  const StepPlan plan = plan_steps(T, dt);
  const Index total_steps = plan.n_full + (plan.remainder > 0.0 ? 1 : 0);

  std::vector<WaveState> out;
  out.reserve(n_outputs + 1);
  WaveState state = system.project_initial(psi_in);
  out.push_back(state);
  if (total_steps == 0) return out;

  // Step indices to record: roughly uniform, ending at the final step.
  std::vector<Index> marks;
  for (int i = 1; i <= n_outputs; ++i) {
    const Index k = Index(std::llround(double(i) * double(total_steps) / n_outputs));
    if (k >= 1 && (marks.empty() || k > marks.back())) marks.push_back(k);
  }
  if (marks.back() != total_steps) marks.push_back(total_steps);

  CrankNicolson cn(system, xi, dt);
  std::size_t mi = 0;
  for (Index k = 1; k <= total_steps; ++k) {
    if (k <= plan.n_full) {
      state = cn.step(state);
      state.t = double(k) * dt;  // avoid accumulation drift in reported times
    } else {
      state = CrankNicolson(system, xi, plan.remainder).step(state);
      state.t = T;
    }
    if (mi < marks.size() && marks[mi] == k) {
      out.push_back(state);
      ++mi;
    }
  }
  return out;
}

double sensitivity_check(const GalerkinSystem& system, const SpMat& fine_M,
                         const Vec& xi, int j, double delta, const Vec& psi_in,
                         double T, double dt) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  Vec xi_plus = xi, xi_minus = xi;
  xi_plus[j] += delta;
  xi_minus[j] -= delta;
  const CVec psi_plus = system.reconstruct(evolve(system, xi_plus, psi_in, T, dt));
  const CVec psi_minus = system.reconstruct(evolve(system, xi_minus, psi_in, T, dt));
  const CVec diff = (psi_plus - psi_minus) / (2.0 * delta);
  const Complex q = diff.dot(fine_M.cast<Complex>() * diff);
  return std::sqrt(std::max(0.0, q.real()));
}

}  // namespace msrb
