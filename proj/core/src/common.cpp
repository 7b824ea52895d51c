#include "msrb/common.hpp"

#include <cstdio>

namespace msrb {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace {

template <typename V>
V pairwise_sum(const std::vector<V>& values, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return values[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi);
}

}  // namespace

Vec pairwise_mean(const std::vector<Vec>& values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sample set");
  return pairwise_sum(values, 0, values.size()) / double(values.size());
}

CVec pairwise_mean(const std::vector<CVec>& values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sample set");
  return pairwise_sum(values, 0, values.size()) / double(values.size());
}

}  // namespace msrb
