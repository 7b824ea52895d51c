#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "msrb/assembly.hpp"
#include "msrb/pod.hpp"

using namespace msrb;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Hand-rolled snapshot set over the whole grid.
SnapshotSet make_set(const std::vector<Vec>& coeffs) {
  SnapshotSet s;
  s.node = 0;
  const Index n = coeffs.front().size();
  for (Index i = 0; i < n; ++i) s.support.push_back(i);
  s.coeffs = coeffs;
  s.mean = Vec::Zero(n);
  for (const auto& c : coeffs) s.mean += c;
  s.mean /= double(coeffs.size());
  for (const auto& c : coeffs) s.fluctuations.push_back(c - s.mean);
  s.xi = Mat::Zero(Index(coeffs.size()), 1);
  return s;
}

double x_norm(const Vec& v, const SpMat& W) { return std::sqrt(v.dot(W * v)); }

}  // namespace

TEST_CASE("antisymmetric pair compresses to one mode") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 32);
  const SpMat M = assemble_M(g);
  Vec s(32);
  for (Index i = 0; i < 32; ++i) s[i] = std::sin(g.node_position(i)[0]);
  const SnapshotSet set = make_set({s, Vec(-s)});
  const auto rb = compute_pod(set, PodCriterion::fixed(1), InnerProduct::L2, M);

  CHECK(rb.zeta0.cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE(rb.mode_count() == 1);
  REQUIRE(rb.eigenvalues.size() == 1);
  CHECK(energy_ratio(rb.eigenvalues, 1) == doctest::Approx(1.0));
  // mode is s normalized in the M inner product (up to sign)
  const Vec unit = s / x_norm(s, M);
  const double diff_plus = (rb.modes[0] - unit).cwiseAbs().maxCoeff();
  const double diff_minus = (rb.modes[0] + unit).cwiseAbs().maxCoeff();
  CHECK(std::min(diff_plus, diff_minus) < 1e-12);
}

TEST_CASE("POD identity: reconstruction error ratio equals the spectral tail") {
  std::mt19937 rng(21);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 64 << (trial % 2);
    const int q = 8 + 6 * trial;
    const auto g = PeriodicGrid::line(-kPi, kTwoPi, n);
    const SpMat M = assemble_M(g);
    const SpMat S = assemble_S(g);

    std::vector<Vec> coeffs;
    for (int k = 0; k < q; ++k) {
      Vec c(n);
      for (Index i = 0; i < n; ++i) c[i] = gauss(rng);
      coeffs.push_back(c);
    }
    const SnapshotSet set = make_set(coeffs);

    for (InnerProduct ip : {InnerProduct::L2, InnerProduct::H1}) {
      const SpMat W = ip == InnerProduct::L2 ? M : SpMat(S + M);
      for (int mk : {1, 3, q / 2}) {
        const auto rb = compute_pod(set, PodCriterion::fixed(mk), ip, M, &S);
        REQUIRE(rb.mode_count() == mk);
        double num = 0.0, den = 0.0;
        for (const auto& f : set.fluctuations) {
          Vec resid = f;
          for (const auto& mode : rb.modes)
            resid -= mode.dot(W * f) * mode;
          num += resid.dot(W * resid);
          den += f.dot(W * f);
        }
        const double lhs = num / den;
        const double rhs = 1.0 - energy_ratio(rb.eigenvalues, mk);
        CHECK(std::abs(lhs - rhs) < 1e-10);
      }
    }
  }
}

TEST_CASE("modes are orthonormal in the chosen inner product") {
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 48);
  const SpMat M = assemble_M(g);
  const SpMat S = assemble_S(g);
  std::vector<Vec> coeffs;
  for (int k = 0; k < 12; ++k) {
    Vec c(48);
    for (Index i = 0; i < 48; ++i) c[i] = gauss(rng);
    coeffs.push_back(c);
  }
  const SnapshotSet set = make_set(coeffs);
  for (InnerProduct ip : {InnerProduct::L2, InnerProduct::H1}) {
    const SpMat W = ip == InnerProduct::L2 ? M : SpMat(S + M);
    const auto rb = compute_pod(set, PodCriterion::fixed(5), ip, M, &S);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b <= a; ++b) {
        const double dot = rb.modes[a].dot(W * rb.modes[b]);
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
      }
    // spectrum is positive and non-increasing
    for (Index i = 1; i < rb.eigenvalues.size(); ++i) {
      CHECK(rb.eigenvalues[i] > 0.0);
      CHECK(rb.eigenvalues[i] <= rb.eigenvalues[i - 1] * (1 + 1e-13));
    }
  }
}

TEST_CASE("energy ratio arithmetic") {
  Vec lam(2);
  lam << 3.0, 1.0;
  CHECK(energy_ratio(lam, 2) == doctest::Approx(1.0));
  CHECK(energy_ratio(lam, 1) == doctest::Approx(0.75));
  CHECK(energy_ratio(lam, 0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(energy_ratio(lam, 3), std::invalid_argument);
  // monotone in m_k
  Vec lam2(4);
  lam2 << 5, 3, 2, 1;
  double prev = 0.0;
  for (int mk = 0; mk <= 4; ++mk) {
    const double r = energy_ratio(lam2, mk);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("energy-ratio criterion picks the smallest sufficient m_k") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 32);
  const SpMat M = assemble_M(g);
  // two dominant directions with a small third
  Vec a = Vec::Zero(32), b = Vec::Zero(32), c = Vec::Zero(32);
  a[0] = 10.0;
  b[5] = 3.0;
  c[11] = 0.1;
  const SnapshotSet set = make_set({a, b, c, Vec(-a), Vec(-b), Vec(-c)});
  const auto rb = compute_pod(set, PodCriterion::energy(0.99), InnerProduct::L2, M);
  CHECK(rb.mode_count() == 2);
  CHECK(energy_ratio(rb.eigenvalues, rb.mode_count()) >= 0.99);
}

TEST_CASE("POD of the snapshot span beats random projections of equal rank") {
  std::mt19937 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 24);
  const SpMat M = assemble_M(g);
  std::vector<Vec> coeffs;
  for (int k = 0; k < 8; ++k) {
    Vec v(24);
    for (Index i = 0; i < 24; ++i) v[i] = gauss(rng);
    coeffs.push_back(v);
  }
  const SnapshotSet set = make_set(coeffs);
  const int mk = 3;
  const auto rb = compute_pod(set, PodCriterion::fixed(mk), InnerProduct::L2, M);

  const auto total_residual = [&](const std::vector<Vec>& basis) {
    // Gram-Schmidt in the M inner product
    std::vector<Vec> on;
    for (Vec v : basis) {
      for (const auto& u : on) v -= u.dot(M * v) * u;
      const double nrm = x_norm(v, M);
      if (nrm > 1e-12) on.push_back(v / nrm);
    }
    double acc = 0.0;
    for (const auto& f : set.fluctuations) {
      Vec r = f;
      for (const auto& u : on) r -= u.dot(M * f) * u;
      acc += r.dot(M * r);
    }
    return acc;
  };

  const double pod_res = total_residual(rb.modes);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> rand_basis;
    for (int k = 0; k < mk; ++k) {
      Vec v = Vec::Zero(24);
      for (const auto& f : set.fluctuations) v += coef(rng) * f;
      rand_basis.push_back(v);
    }
    CHECK(pod_res <= total_residual(rand_basis) + 1e-10);
  }
}

TEST_CASE("degenerate inputs") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 16);
  const SpMat M = assemble_M(g);
  // all-zero fluctuations: empty mode list is valid
  const SnapshotSet zero = make_set({Vec(Vec::Ones(16)), Vec(Vec::Ones(16))});
  const auto rb = compute_pod(zero, PodCriterion::fixed(2), InnerProduct::L2, M);
  CHECK(rb.mode_count() == 0);
  CHECK(rb.eigenvalues.size() == 0);
  CHECK((rb.zeta0 - Vec::Ones(16)).cwiseAbs().maxCoeff() < 1e-15);

  const SnapshotSet tiny = make_set({Vec(Vec::Ones(16))});
  CHECK_THROWS_AS(compute_pod(tiny, PodCriterion::fixed(1), InnerProduct::L2, M),
                  std::invalid_argument);
  const SnapshotSet two = make_set({Vec(Vec::Ones(16)), Vec(Vec::Zero(16))});
  CHECK_THROWS_AS(compute_pod(two, PodCriterion::fixed(5), InnerProduct::L2, M),
                  std::invalid_argument);
  CHECK_THROWS_AS(compute_pod(two, PodCriterion::fixed(1), InnerProduct::H1, M),
                  std::invalid_argument);
  CHECK_THROWS_AS(PodCriterion::energy(0.0), std::invalid_argument);
  CHECK_THROWS_AS(PodCriterion::energy(1.5), std::invalid_argument);
}
