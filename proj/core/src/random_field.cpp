#include "msrb/random_field.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace msrb {

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "sect5-multiscale") return PotentialKind::Sect5Multiscale;
  if (name == "decay-1d") return PotentialKind::Decay1D;
  if (name == "anderson-1d") return PotentialKind::Anderson1D;
  if (name == "anderson-2d") return PotentialKind::Anderson2D;
  throw std::invalid_argument("unknown potential kind '" + name + "'");
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Sect5Multiscale: return "sect5-multiscale";
    case PotentialKind::Decay1D: return "decay-1d";
    case PotentialKind::Anderson1D: return "anderson-1d";
    case PotentialKind::Anderson2D: return "anderson-2d";
  }
  return "?";
}

KLPotential make_example_1d(PotentialKind kind, const PeriodicGrid& grid,
                            double sigma, double beta, int m,
                            const std::vector<double>& E) {
  if (m < 1) throw std::invalid_argument("potential needs m >= 1 modes");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  const Index n = grid.node_count();

  KLPotential p;
  p.m = m;
  p.kind = to_string(kind);
  p.amplitudes = Vec::Constant(m, sigma);
  p.modes.reserve(m);

  switch (kind) {
    case PotentialKind::Sect5Multiscale: {
      if (grid.dim() != 1)
        throw std::invalid_argument("sect5-multiscale is a 1D potential");
      if (int(E.size()) != m)
        throw std::invalid_argument("sect5-multiscale needs an E vector of length m");
      p.mean = Vec::Ones(n);
      for (int j = 1; j <= m; ++j) {
        Vec mode(n);
        for (Index i = 0; i < n; ++i) {
          const double x = grid.node_position(i)[0];
          mode[i] = std::sin(j * x * x) * std::sin(x / E[j - 1]);
        }
        p.modes.push_back(std::move(mode));
      }
      break;
    }
    case PotentialKind::Decay1D:
    case PotentialKind::Anderson1D: {
      if (grid.dim() != 1)
        throw std::invalid_argument(to_string(kind) + " is a 1D potential");
      p.mean = kind == PotentialKind::Decay1D ? Vec::Ones(n) : Vec::Zero(n);
      for (int j = 1; j <= m; ++j) {
        Vec mode(n);
        for (Index i = 0; i < n; ++i)
          mode[i] = std::sin(j * grid.node_position(i)[0]);
        p.modes.push_back(std::move(mode));
        p.amplitudes[j - 1] = sigma * std::pow(double(j), -beta);
      }
      break;
    }
    case PotentialKind::Anderson2D: {
      if (grid.dim() != 2)
        throw std::invalid_argument("anderson-2d needs a 2D grid");
      p.mean = Vec::Zero(n);
      for (int j = 1; j <= m; ++j) {
        Vec mode(n);
        for (Index i = 0; i < n; ++i) {
          const auto x = grid.node_position(i);
          mode[i] = std::sin(j * x[0]) * std::sin(j * x[1]);
        }
        p.modes.push_back(std::move(mode));
        p.amplitudes[j - 1] = sigma * std::pow(double(j), -beta);
      }
      break;
    }
  }
  return p;
}

PotentialSample sample(const KLPotential& potential, const Vec& xi) {
  if (xi.size() != potential.m)
    throw std::invalid_argument("xi dimension mismatch: expected " +
                                std::to_string(potential.m) + ", got " +
                                std::to_string(xi.size()));
  const double r = std::sqrt(3.0);
  for (Index j = 0; j < xi.size(); ++j) {
    if (std::abs(xi[j]) > r + 1e-12) {
      std::cerr << "msrb: warning: xi[" << j << "]=" << xi[j]
                << " outside the law support [-sqrt3, sqrt3]\n";
      break;
    }
  }
  PotentialSample s;
  s.xi = xi;
  s.values = potential.mean;
  for (int j = 0; j < potential.m; ++j)
    s.values += xi[j] * potential.amplitudes[j] * potential.modes[j];
  return s;
}

KLPotential kl_from_kernel(const GaussianKernel& kernel, const PeriodicGrid& grid,
                           int m, const Vec& mean_field) {
  const Index n = grid.node_count();
  if (m < 1 || m > n)
    throw std::invalid_argument("kl_from_kernel needs 1 <= m <= node count");

  // Node weight of the lumped mass matrix; exact for nodal interpolants on
  // a uniform periodic grid.
  double w = grid.spacing(0);
  if (grid.dim() == 2) w *= grid.spacing(1);

  Mat C(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto xi_ = grid.node_position(i);
    for (Index j = i; j < n; ++j) {
      const auto xj = grid.node_position(j);
      double e = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        const double d = xi_[a] - xj[a];
        e += d * d / (2.0 * kernel.correlation_length[a] * kernel.correlation_length[a]);
      }
      C(i, j) = C(j, i) = kernel.sigma * kernel.sigma * std::exp(-e);
    }
  }

  // Mass-weighted operator w*C is symmetric for the uniform lumped mass.
  Eigen::SelfAdjointEigenSolver<Mat> eig(w * C);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("kernel eigenproblem failed to converge");

  // Eigen returns ascending order; walk from the back for descending.
  const double floor = std::max(0.0, eig.eigenvalues().maxCoeff()) * 1e-14;
  int available = 0;
  for (Index i = n - 1; i >= 0; --i) {
    if (eig.eigenvalues()[i] <= floor) break;
    ++available;
  }
  if (available < m) {
    std::cerr << "msrb: warning: kernel has only " << available
              << " positive eigenvalues, truncating expansion from m=" << m << "\n";
    m = available;
  }

  KLPotential p;
  p.kind = "kl-kernel";
  p.m = m;
  p.mean = mean_field.size() == n ? mean_field : Vec::Zero(n);
  p.amplitudes = Vec(m);
  p.eigenvalues = Vec(m);
  for (int k = 0; k < m; ++k) {
    const Index i = n - 1 - k;
    const double lambda = eig.eigenvalues()[i];
    (*p.eigenvalues)[k] = lambda;
    p.amplitudes[k] = std::sqrt(lambda);
    // L2-normalize on the grid: sum w * v_i^2 = 1.
    Vec v = eig.eigenvectors().col(i) / std::sqrt(w);
    p.modes.push_back(std::move(v));
  }
  return p;
}

PotentialBounds bounds(const KLPotential& potential) {
  const double r = std::sqrt(3.0);
  Vec envelope = Vec::Zero(potential.mean.size());
  for (int j = 0; j < potential.m; ++j)
    envelope += r * std::abs(potential.amplitudes[j]) *
                potential.modes[j].cwiseAbs();
  const Vec lo = potential.mean - envelope;
  const Vec hi = potential.mean + envelope;
  return {lo.minCoeff(), hi.maxCoeff()};
}

KLPotential truncate_modes(const KLPotential& potential, int m_keep) {
  if (m_keep < 0 || m_keep > potential.m)
    throw std::invalid_argument("truncate_modes needs 0 <= m_keep <= m");
  KLPotential p = potential;
  p.m = m_keep;
  p.modes.resize(m_keep);
  p.amplitudes = potential.amplitudes.head(m_keep).eval();
  if (p.eigenvalues) p.eigenvalues = potential.eigenvalues->head(m_keep).eval();
  p.kind = potential.kind + "-trunc" + std::to_string(m_keep);
  return p;
}

std::string describe(const KLPotential& potential) {
  std::ostringstream os;
  os << "kind=" << potential.kind << ";m=" << potential.m << ";amps=";
  for (int j = 0; j < potential.m; ++j)
    os << format_double(potential.amplitudes[j]) << (j + 1 < potential.m ? "," : "");
  os << ";mean_hash=" << hex64(fnv1a(std::string(
      reinterpret_cast<const char*>(potential.mean.data()),
      potential.mean.size() * sizeof(double))));
  std::uint64_t mode_hash = 1469598103934665603ull;
  for (const Vec& mode : potential.modes) {
    const std::string bytes(reinterpret_cast<const char*>(mode.data()),
                            mode.size() * sizeof(double));
    mode_hash ^= fnv1a(bytes);
    mode_hash *= 1099511628211ull;
  }
  os << ";mode_hash=" << hex64(mode_hash);
  return os.str();
}

}  // namespace msrb
