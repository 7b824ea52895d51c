#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "msrb/assembly.hpp"

using namespace msrb;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Brute-force dense assembly: hats evaluated through their nodal values and
// the (bi)linear interpolation formula, integrated with 4-point Gauss per
// axis. Independent of the element-matrix code path.
struct BruteForce {
  Mat S, M, V;
};

double hat_value_1d(const PeriodicGrid& g, Index node, double x) {
  const double h = g.spacing(0);
  double d = std::fmod(x - g.node_position(node)[0], g.length(0));
  if (d > g.length(0) / 2) d -= g.length(0);
  if (d < -g.length(0) / 2) d += g.length(0);
  const double t = std::abs(d) / h;
  return t >= 1.0 ? 0.0 : 1.0 - t;
}

BruteForce brute_force_1d(const PeriodicGrid& g, const Vec& v) {
  static const double gp[4] = {0.069431844202973712, 0.33000947820757187,
                               0.66999052179242813, 0.93056815579702629};
  static const double gw[4] = {0.17392742256872693, 0.32607257743127307,
                               0.32607257743127307, 0.17392742256872693};
  const Index n = g.node_count();
  BruteForce out{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  const double h = g.spacing(0);
  for (int c = 0; c < g.cells(0); ++c) {
    const Index left = g.node_index(c), right = g.node_index(c + 1);
    for (int q = 0; q < 4; ++q) {
      const double x = g.origin(0) + (c + gp[q]) * h;
      const double w = gw[q] * h;
      for (Index i : {left, right})
        for (Index j : {left, right}) {
          const double pi_ = hat_value_1d(g, i, x);
          const double pj = hat_value_1d(g, j, x);
          // gradient of a P1 function in this cell from its nodal values
          const double gi = (hat_value_1d(g, i, g.origin(0) + (c + 1.0) * h) -
                             hat_value_1d(g, i, g.origin(0) + c * h)) / h;
          const double gj = (hat_value_1d(g, j, g.origin(0) + (c + 1.0) * h) -
                             hat_value_1d(g, j, g.origin(0) + c * h)) / h;
          const double vx = v[left] * (1.0 - gp[q]) + v[right] * gp[q];
          out.S(i, j) += w * gi * gj;
          out.M(i, j) += w * pi_ * pj;
          out.V(i, j) += w * vx * pi_ * pj;
        }
    }
  }
  return out;
}

BruteForce brute_force_2d(const PeriodicGrid& g, const Vec& v) {
  static const double gp[4] = {0.069431844202973712, 0.33000947820757187,
                               0.66999052179242813, 0.93056815579702629};
  static const double gw[4] = {0.17392742256872693, 0.32607257743127307,
                               0.32607257743127307, 0.17392742256872693};
  const Index n = g.node_count();
  BruteForce out{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  const double hx = g.spacing(0), hy = g.spacing(1);
  for (int cy = 0; cy < g.cells(1); ++cy)
    for (int cx = 0; cx < g.cells(0); ++cx) {
      const auto nodes = cell_nodes(g, cx, cy);
      for (int qy = 0; qy < 4; ++qy)
        for (int qx = 0; qx < 4; ++qx) {
          const double tx = gp[qx], ty = gp[qy];
          const double w = gw[qx] * gw[qy] * hx * hy;
          // corner values determine value and gradient of each bilinear hat
          const auto corner_data = [&](Index hat) {
            std::array<double, 4> c{};
            for (int a = 0; a < 4; ++a) c[a] = (nodes[a] == hat) ? 1.0 : 0.0;
            const double val = c[0] * (1 - tx) * (1 - ty) + c[1] * tx * (1 - ty) +
                               c[2] * (1 - tx) * ty + c[3] * tx * ty;
            const double ddx =
                ((c[1] - c[0]) * (1 - ty) + (c[3] - c[2]) * ty) / hx;
            const double ddy =
                ((c[2] - c[0]) * (1 - tx) + (c[3] - c[1]) * tx) / hy;
            return std::array<double, 3>{val, ddx, ddy};
          };
          const double vx = v[nodes[0]] * (1 - tx) * (1 - ty) +
                            v[nodes[1]] * tx * (1 - ty) +
                            v[nodes[2]] * (1 - tx) * ty + v[nodes[3]] * tx * ty;
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
              const auto da = corner_data(nodes[a]);
              const auto db = corner_data(nodes[b]);
              out.S(nodes[a], nodes[b]) += w * (da[1] * db[1] + da[2] * db[2]);
              out.M(nodes[a], nodes[b]) += w * da[0] * db[0];
              out.V(nodes[a], nodes[b]) += w * vx * da[0] * db[0];
            }
        }
    }
  return out;
}

}  // namespace

TEST_CASE("1D stiffness and mass stencils") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 16);
  const double h = g.spacing(0);
  const Mat S = Mat(assemble_S(g));
  const Mat M = Mat(assemble_M(g));
  for (Index i = 0; i < 16; ++i) {
    CHECK(S(i, i) == doctest::Approx(2.0 / h).epsilon(1e-14));
    CHECK(S(i, (i + 1) % 16) == doctest::Approx(-1.0 / h).epsilon(1e-14));
    CHECK(M(i, i) == doctest::Approx(2.0 * h / 3.0).epsilon(1e-14));
    CHECK(M(i, (i + 1) % 16) == doctest::Approx(h / 6.0).epsilon(1e-14));
  }
  CHECK(S.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(M.sum() == doctest::Approx(kTwoPi).epsilon(1e-13));
  // positive definite mass
  Eigen::LLT<Mat> llt(M);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("2D stiffness is PSD with a single zero eigenvalue") {
  const auto g = PeriodicGrid::square(-kPi, kTwoPi, 4);
  const Mat S = Mat(assemble_S(g));
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> eig(S);
  int zero_count = 0;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
    CHECK(eig.eigenvalues()[i] > -1e-12);
    if (std::abs(eig.eigenvalues()[i]) < 1e-10) ++zero_count;
  }
  CHECK(zero_count == 1);
  CHECK(Mat(assemble_M(g)).sum() == doctest::Approx(kTwoPi * kTwoPi).epsilon(1e-12));
}

TEST_CASE("constant potential gives V = c M") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 32);
  const double c = -2.75;
  const Mat V = Mat(assemble_V(g, Vec(Vec::Constant(32, c))));
  const Mat M = Mat(assemble_M(g));
  CHECK((V - c * M).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("potential assembly is linear and preserves positivity") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 24);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  Vec v1(24), v2(24);
  for (Index i = 0; i < 24; ++i) {
    v1[i] = dist(rng);
    v2[i] = dist(rng) - 1.0;
  }
  const Mat lhs = Mat(assemble_V(g, Vec(v1 + v2)));
  const Mat rhs = Mat(assemble_V(g, v1)) + Mat(assemble_V(g, v2));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);

  Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(assemble_V(g, v1)));  // v1 >= 0
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("assembly agrees with the brute-force oracle (1D)") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 48);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  Vec v(48);
  for (Index i = 0; i < 48; ++i) v[i] = dist(rng);
  const BruteForce bf = brute_force_1d(g, v);
  CHECK((Mat(assemble_S(g)) - bf.S).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mat(assemble_M(g)) - bf.M).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mat(assemble_V(g, v)) - bf.V).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembly agrees with the brute-force oracle (2D)") {
  const auto g = PeriodicGrid::square(-kPi, kTwoPi, 8);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Vec v(g.node_count());
  for (Index i = 0; i < g.node_count(); ++i) v[i] = dist(rng);
  const BruteForce bf = brute_force_2d(g, v);
  CHECK((Mat(assemble_S(g)) - bf.S).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mat(assemble_M(g)) - bf.M).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mat(assemble_V(g, v)) - bf.V).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assemble_Q composes the Hamiltonian") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 16);
  const SpMat S = assemble_S(g);
  const SpMat M = assemble_M(g);
  SpMat zero(16, 16);
  const Mat Q = Mat(assemble_Q(S, zero, std::sqrt(2.0), 0.0, M));
  CHECK((Q - Mat(S)).cwiseAbs().maxCoeff() < 1e-14);
  const Mat Q2 = Mat(assemble_Q(S, assemble_V(g, Vec(Vec::Ones(16))), 1.0, 0.0, M));
  Eigen::LLT<Mat> llt(Q2);  // (1/2)S + M is PD
  CHECK(llt.info() == Eigen::Success);
  CHECK_THROWS_AS(assemble_Q(S, zero, 1.0, -1.0, M), std::invalid_argument);
}

TEST_CASE("generalized spectrum shifts exactly with the mass shift") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 12);
  const SpMat S = assemble_S(g);
  const SpMat M = assemble_M(g);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec v(12);
  for (Index i = 0; i < 12; ++i) v[i] = dist(rng);
  const SpMat V = assemble_V(g, v);
  const double sigma = 2.5;
  const Mat Q = Mat(assemble_Q(S, V, 0.5, 0.0, M));
  const Mat Qs = Mat(assemble_Q(S, V, 0.5, sigma, M));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> a(Q, Mat(M));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> b(Qs, Mat(M));
  CHECK((b.eigenvalues() - a.eigenvalues() -
         Vec::Constant(12, sigma)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constraint matrix A") {
  const auto coarse = PeriodicGrid::line(-kPi, kTwoPi, 8);
  SUBCASE("identity nesting gives A = M") {
    const CoarseFineMap map(coarse, coarse);
    CHECK((Mat(assemble_A(map)) - Mat(assemble_M(coarse))).cwiseAbs().maxCoeff() <
          1e-14);
  }
  SUBCASE("row sums equal the coarse hat integral H") {
    const auto fine = PeriodicGrid::line(-kPi, kTwoPi, 32);
    const CoarseFineMap map(coarse, fine);
    const Mat A = Mat(assemble_A(map));
    const double H = coarse.spacing(0);
    for (Index j = 0; j < 8; ++j)
      CHECK(A.row(j).sum() == doctest::Approx(H).epsilon(1e-13));
  }
  SUBCASE("full row rank") {
    const auto fine = PeriodicGrid::line(-kPi, kTwoPi, 32);
    const CoarseFineMap map(coarse, fine);
    Eigen::JacobiSVD<Mat> svd(Mat(assemble_A(map)));
    CHECK(svd.singularValues().minCoeff() >
          1e-10 * svd.singularValues().maxCoeff());
  }
  SUBCASE("A is interpolation^T M") {
    const auto fine = PeriodicGrid::line(-kPi, kTwoPi, 48);
    const CoarseFineMap map(coarse, fine);
    const Mat lhs = Mat(assemble_A(map));
    const Mat rhs = Mat(interpolation_matrix(map)).transpose() * Mat(assemble_M(fine));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("grid mismatch is rejected") {
  const auto g = PeriodicGrid::line(-kPi, kTwoPi, 16);
  CHECK_THROWS_AS(assemble_V(g, Vec(Vec::Ones(8))), std::invalid_argument);
}
