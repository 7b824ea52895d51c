#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msrb/basis.hpp"
#include "msrb/common.hpp"
#include "msrb/pod.hpp"

namespace msrb {

/// On-disk store for offline artifacts keyed by a content hash of the
/// producing parameters. The offline stage (snapshots and reduced bases)
/// and expensive reference means are reusable across runs with identical
/// keys; a mismatched key is simply a miss.
class Cache {
public:
  explicit Cache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  bool has(const std::string& kind, std::uint64_t key) const;

  void store_snapshots(std::uint64_t key, const std::vector<SnapshotSet>& sets);
  std::optional<std::vector<SnapshotSet>> load_snapshots(std::uint64_t key) const;

  void store_reduced(std::uint64_t key, const std::vector<ReducedBasisSet>& sets);
  std::optional<std::vector<ReducedBasisSet>> load_reduced(std::uint64_t key) const;

  /// Checkpointed sample means: (sample count, mean vector) pairs.
  void store_means(std::uint64_t key,
                   const std::vector<std::pair<Index, CVec>>& means);
  std::optional<std::vector<std::pair<Index, CVec>>> load_means(
      std::uint64_t key) const;

private:
  std::filesystem::path file(const std::string& kind, std::uint64_t key) const;
  std::filesystem::path dir_;
};

}  // namespace msrb
