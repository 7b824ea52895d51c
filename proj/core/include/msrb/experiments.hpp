#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "msrb/config.hpp"

namespace msrb {

/// Outcome of a declarative experiment run: the artifact directory, the
/// CSV files written, and named scalar results for programmatic checks.
struct ExperimentOutput {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;
  std::map<std::string, double> metrics;
};

/// Dispatch on experiment.kind: converge-h, converge-pod, converge-qmc,
/// offline-q, qmc-eps-scaling, qmc-dim-scaling, anderson-1d, anderson-2d,
/// decay-diagnostic.
ExperimentOutput run_experiment(const Config& cfg);

struct StageResult {
  bool cache_hit = false;
  std::uint64_t key = 0;
  std::string message;
  std::map<std::string, double> metrics;
};

/// Stage-wise execution against the snapshot cache; each stage is
/// idempotent for an identical configuration hash.
StageResult stage_basis_build(const Config& cfg);
StageResult stage_pod(const Config& cfg);
ExperimentOutput stage_solve(const Config& cfg);

}  // namespace msrb
