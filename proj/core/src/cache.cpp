#include "msrb/cache.hpp"

#include <cstdint>
#include <fstream>

namespace msrb {

namespace {

constexpr std::uint64_t kMagic = 0x4d535242'43414348ull;  // "MSRBCACH"
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  explicit Writer(const std::filesystem::path& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cache: cannot write " + path.string());
  }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void vec(const Vec& v) {
    u64(std::uint64_t(v.size()));
    raw(v.data(), std::size_t(v.size()) * sizeof(double));
  }
  void cvec(const CVec& v) {
    u64(std::uint64_t(v.size()));
    raw(v.data(), std::size_t(v.size()) * sizeof(Complex));
  }
  void mat(const Mat& m) {
    u64(std::uint64_t(m.rows()));
    u64(std::uint64_t(m.cols()));
    raw(m.data(), std::size_t(m.size()) * sizeof(double));
  }
  void indices(const std::vector<Index>& v) {
    u64(v.size());
    for (Index i : v) u64(std::uint64_t(i));
  }
  bool good() const { return bool(out_); }

private:
  void raw(const void* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), std::streamsize(n));
  }
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary) {}
  bool open() const { return bool(in_); }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v = 0;
    raw(&v, sizeof v);
    return v;
  }
  Vec vec() {
    const Index n = Index(u64());
    Vec v(n);
    raw(v.data(), std::size_t(v.size()) * sizeof(double));
    return v;
  }
  CVec cvec() {
    const Index n = Index(u64());
    CVec v(n);
    raw(v.data(), std::size_t(v.size()) * sizeof(Complex));
    return v;
  }
  Mat mat() {
    const Index r = Index(u64()), c = Index(u64());
    Mat m(r, c);
    raw(m.data(), std::size_t(m.size()) * sizeof(double));
    return m;
  }
  std::vector<Index> indices() {
    std::vector<Index> v(u64());
    for (auto& i : v) i = Index(u64());
    return v;
  }

private:
  void raw(void* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), std::streamsize(n));
    if (!in_) throw std::runtime_error("cache: truncated file");
  }
  std::ifstream in_;
};

}  // namespace

Cache::Cache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path Cache::file(const std::string& kind,
                                  std::uint64_t key) const {
  return dir_ / ("msrb-" + kind + "-" + hex64(key) + ".bin");
}

bool Cache::has(const std::string& kind, std::uint64_t key) const {
  return std::filesystem::exists(file(kind, key));
}

void Cache::store_snapshots(std::uint64_t key,
                            const std::vector<SnapshotSet>& sets) {
  Writer w(file("snap", key));
  w.u64(kMagic);
  w.u32(kVersion);
  w.u64(key);
  w.u64(sets.size());
  for (const auto& s : sets) {
    w.u64(std::uint64_t(s.node));
    w.indices(s.support);
    w.mat(s.xi);
    w.f64(s.shift_used);
    w.u64(s.coeffs.size());
    for (const Vec& c : s.coeffs) w.vec(c);
    w.vec(s.mean);
  }
}

std::optional<std::vector<SnapshotSet>> Cache::load_snapshots(
    std::uint64_t key) const {
  Reader r(file("snap", key));
  if (!r.open()) return std::nullopt;
  if (r.u64() != kMagic || r.u32() != kVersion || r.u64() != key)
    return std::nullopt;
  std::vector<SnapshotSet> sets(r.u64());
  for (auto& s : sets) {
    s.node = Index(r.u64());
    s.support = r.indices();
    s.xi = r.mat();
    s.shift_used = r.f64();
    s.coeffs.resize(r.u64());
    for (Vec& c : s.coeffs) c = r.vec();
    s.mean = r.vec();
    s.fluctuations.reserve(s.coeffs.size());
    for (const Vec& c : s.coeffs) s.fluctuations.push_back(c - s.mean);
  }
  return sets;
}

void Cache::store_reduced(std::uint64_t key,
                          const std::vector<ReducedBasisSet>& sets) {
  Writer w(file("rb", key));
  w.u64(kMagic);
  w.u32(kVersion);
  w.u64(key);
  w.u64(sets.size());
  for (const auto& s : sets) {
    w.u64(std::uint64_t(s.node));
    w.indices(s.support);
    w.vec(s.zeta0);
    w.u64(s.modes.size());
    for (const Vec& m : s.modes) w.vec(m);
    w.vec(s.eigenvalues);
    w.u32(s.inner_product == InnerProduct::L2 ? 0 : 1);
    w.f64(s.shift_used);
  }
}

std::optional<std::vector<ReducedBasisSet>> Cache::load_reduced(
    std::uint64_t key) const {
  Reader r(file("rb", key));
  if (!r.open()) return std::nullopt;
  if (r.u64() != kMagic || r.u32() != kVersion || r.u64() != key)
    return std::nullopt;
  std::vector<ReducedBasisSet> sets(r.u64());
  for (auto& s : sets) {
    s.node = Index(r.u64());
    s.support = r.indices();
    s.zeta0 = r.vec();
    s.modes.resize(r.u64());
    for (Vec& m : s.modes) m = r.vec();
    s.eigenvalues = r.vec();
    s.inner_product = r.u32() == 0 ? InnerProduct::L2 : InnerProduct::H1;
    s.shift_used = r.f64();
  }
  return sets;
}

void Cache::store_means(std::uint64_t key,
                        const std::vector<std::pair<Index, CVec>>& means) {
  Writer w(file("ref", key));
  w.u64(kMagic);
  w.u32(kVersion);
  w.u64(key);
  w.u64(means.size());
  for (const auto& [n, v] : means) {
    w.u64(std::uint64_t(n));
    w.cvec(v);
  }
}

std::optional<std::vector<std::pair<Index, CVec>>> Cache::load_means(
    std::uint64_t key) const {
  Reader r(file("ref", key));
  if (!r.open()) return std::nullopt;
  if (r.u64() != kMagic || r.u32() != kVersion || r.u64() != key)
    return std::nullopt;
  std::vector<std::pair<Index, CVec>> means(r.u64());
  for (auto& [n, v] : means) {
    n = Index(r.u64());
    v = r.cvec();
  }
  return means;
}

}  // namespace msrb
