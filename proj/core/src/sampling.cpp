#include "msrb/sampling.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace msrb {

SampleMethod parse_sample_method(const std::string& name) {
  if (name == "mc") return SampleMethod::MonteCarlo;
  if (name == "sobol") return SampleMethod::Sobol;
  if (name == "shifted-lattice") return SampleMethod::ShiftedLattice;
  throw std::invalid_argument("unknown sampling method '" + name + "'");
}

std::string to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::MonteCarlo: return "mc";
    case SampleMethod::Sobol: return "sobol";
    case SampleMethod::ShiftedLattice: return "shifted-lattice";
  }
  return "?";
}

namespace {

// Sobol direction-number parameters (Joe & Kuo), dimensions 2..32; the
// first dimension is the van der Corput sequence in base 2.
struct SobolRow {
  int degree;
  unsigned poly;  // coefficients of the primitive polynomial, a_1..a_{s-1}
  unsigned m[7];  // initial odd direction integers m_1..m_s
};

constexpr SobolRow kSobolRows[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 129}},
    {7, 21, {1, 1, 5, 11, 19, 41, 183}},
    {7, 28, {1, 3, 5, 3, 3, 59, 57}},
    {7, 31, {1, 3, 7, 7, 5, 57, 25}},
    {7, 32, {1, 3, 5, 13, 31, 47, 109}},
    {7, 37, {1, 3, 7, 9, 25, 43, 107}},
    {7, 41, {1, 1, 3, 3, 13, 7, 37}},
    {7, 42, {1, 3, 1, 15, 27, 13, 163}},
};

constexpr int kSobolBits = 32;

// Direction integers V_k scaled by 2^32 for one dimension.
std::vector<std::uint64_t> sobol_directions(int dim) {
  std::vector<std::uint64_t> v(kSobolBits);
  if (dim == 0) {
    for (int k = 0; k < kSobolBits; ++k) v[k] = 1ull << (kSobolBits - 1 - k);
    return v;
  }
  const SobolRow& row = kSobolRows[dim - 1];
  const int s = row.degree;
  std::vector<std::uint64_t> m(kSobolBits);
  for (int k = 0; k < s; ++k) m[k] = row.m[k];
  for (int k = s; k < kSobolBits; ++k) {
    std::uint64_t mk = m[k - s] ^ (m[k - s] << s);
    for (int i = 1; i < s; ++i)
      if (row.poly & (1u << (s - 1 - i))) mk ^= m[k - i] << i;
    m[k] = mk;
  }
  for (int k = 0; k < kSobolBits; ++k) v[k] = m[k] << (kSobolBits - 1 - k);
  return v;
}

Mat generate_sobol(const SamplePlan& plan) {
  if (plan.m > sobol_max_dimension())
    throw std::invalid_argument(
        "sobol dimension " + std::to_string(plan.m) + " exceeds table limit " +
        std::to_string(sobol_max_dimension()));
  std::vector<std::vector<std::uint64_t>> v(plan.m);
  for (int j = 0; j < plan.m; ++j) v[j] = sobol_directions(j);

  Mat pts(plan.n, plan.m);
  std::vector<std::uint64_t> state(plan.m, 0);
  const double scale = std::ldexp(1.0, -kSobolBits);
  // Gray-code stepping; index i=0 (the all-zeros point) is skipped.
  for (Index i = 1; i <= plan.n; ++i) {
    const int k = std::countr_zero(std::uint64_t(i));
    if (k >= kSobolBits) throw std::invalid_argument("sobol sequence exhausted");
    for (int j = 0; j < plan.m; ++j) {
      state[j] ^= v[j][k];
      pts(i - 1, j) = double(state[j]) * scale;
    }
  }
  return pts;
}

// Deterministic uniform doubles from mt19937_64, mapped explicitly so every
// platform produces the same stream.
Mat generate_mc(const SamplePlan& plan) {
  std::mt19937_64 rng(plan.seed);
  Mat pts(plan.n, plan.m);
  for (Index i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.m; ++j)
      pts(i, j) = double(rng() >> 11) * 0x1.0p-53;
  return pts;
}

Mat generate_lattice(const SamplePlan& plan) {
  if (!plan.generating_vector)
    throw std::invalid_argument("shifted-lattice plan needs a generating vector");
  const auto& z = *plan.generating_vector;
  if (int(z.size()) != plan.m)
    throw std::invalid_argument("generating vector length must equal dimension");

  std::vector<double> shift(plan.m, 0.0);
  if (plan.shift) {
    if (int(plan.shift->size()) != plan.m)
      throw std::invalid_argument("shift length must equal dimension");
    shift = *plan.shift;
  } else {
    std::mt19937_64 rng(plan.seed);
    for (auto& s : shift) s = double(rng() >> 11) * 0x1.0p-53;
  }

  const std::uint64_t n = std::uint64_t(plan.n);
  Mat pts(plan.n, plan.m);
  for (Index i = 1; i <= plan.n; ++i) {
    for (int j = 0; j < plan.m; ++j) {
      const double frac_iz = double((std::uint64_t(i) * (z[j] % n)) % n) / double(n);
      double x = frac_iz + shift[j];
      x -= std::floor(x);
      pts(i - 1, j) = x;
    }
  }
  return pts;
}

}  // namespace

int sobol_max_dimension() {
  return 1 + int(sizeof(kSobolRows) / sizeof(kSobolRows[0]));
}

Mat generate(const SamplePlan& plan) {
  if (plan.n < 1) throw std::invalid_argument("sample count must be >= 1");
  if (plan.m < 1) throw std::invalid_argument("dimension must be >= 1");
  switch (plan.method) {
    case SampleMethod::MonteCarlo: return generate_mc(plan);
    case SampleMethod::Sobol: return generate_sobol(plan);
    case SampleMethod::ShiftedLattice: return generate_lattice(plan);
  }
  throw std::logic_error("unreachable");
}

Mat to_xi(const Mat& points) {
  const double r = std::sqrt(3.0);
  return (2.0 * points.array() - 1.0) * r;
}

CVec qmc_mean(const std::vector<CVec>& values) { return pairwise_mean(values); }
Vec qmc_mean(const std::vector<Vec>& values) { return pairwise_mean(values); }

std::vector<std::uint64_t> read_generating_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open generating vector file " + path);
  std::vector<std::uint64_t> z;
  std::uint64_t v;
  while (in >> v) z.push_back(v);
  if (z.empty()) throw std::runtime_error("empty generating vector file " + path);
  return z;
}

}  // namespace msrb
