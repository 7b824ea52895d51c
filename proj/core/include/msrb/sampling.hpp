#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msrb/common.hpp"

namespace msrb {

enum class SampleMethod { MonteCarlo, Sobol, ShiftedLattice };

SampleMethod parse_sample_method(const std::string& name);
std::string to_string(SampleMethod m);

/// Description of a point set in [0,1]^m. For shifted lattice rules a
/// generating vector of length m must be supplied; the shift is drawn once
/// from the seed unless given explicitly.
struct SamplePlan {
  SampleMethod method = SampleMethod::Sobol;
  Index n = 1;
  int m = 1;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::uint64_t>> generating_vector;
  std::optional<std::vector<double>> shift;
};

/// Highest dimension served by the embedded Sobol direction-number table.
int sobol_max_dimension();

/// Generate the n points of the plan as rows of an n-by-m matrix.
///   mc             seeded pseudo-random uniforms, reproducible bit-for-bit
///   sobol          Gray-code Sobol sequence, index 0 (the origin) skipped
///   shifted-lattice  frac(i z / n + shift), i = 1..n
Mat generate(const SamplePlan& plan);

/// Map unit-cube points to the KL variable law: xi = sqrt(3) (2u - 1),
/// uniform on [-sqrt(3), sqrt(3)] with unit variance.
Mat to_xi(const Mat& points);

/// Arithmetic mean with a fixed pairwise summation order.
CVec qmc_mean(const std::vector<CVec>& values);
Vec qmc_mean(const std::vector<Vec>& values);

/// Read a generating vector, one integer per line.
std::vector<std::uint64_t> read_generating_vector(const std::string& path);

}  // namespace msrb
