#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace msrb {

using Real = double;
using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<Complex>;
using Index = Eigen::Index;

/// Thrown when a linear solve detects loss of definiteness; carries the
/// smallest pivot seen so the caller can decide on a shift.
class DefinitenessError : public std::runtime_error {
public:
  DefinitenessError(const std::string& what, double smallest_pivot)
      : std::runtime_error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

private:
  double smallest_pivot_;
};

/// FNV-1a over a byte string; used for cache keys and output manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

/// Locale-independent shortest-roundtrip formatting (%.17g) so identical
/// runs produce byte-identical CSV files.
std::string format_double(double v);

/// Sum with a fixed pairwise reduction order, independent of chunking.
Vec pairwise_mean(const std::vector<Vec>& values);
CVec pairwise_mean(const std::vector<CVec>& values);

}  // namespace msrb
