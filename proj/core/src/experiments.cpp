#include "msrb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include "msrb/assembly.hpp"
#include "msrb/basis.hpp"
#include "msrb/cache.hpp"
#include "msrb/evolve.hpp"
#include "msrb/mesh.hpp"
#include "msrb/observables.hpp"
#include "msrb/pod.hpp"
#include "msrb/random_field.hpp"
#include "msrb/sampling.hpp"

namespace msrb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------
// configuration plumbing

PeriodicGrid make_fine_grid(const Config& cfg) {
  const int dim = int(cfg.get_int("grid.dim", 1));
  const long cells = cfg.get_int("grid.fine-cells");
  if (dim == 1) return PeriodicGrid::line(-std::numbers::pi, kTwoPi, int(cells));
  return PeriodicGrid::square(-std::numbers::pi, kTwoPi, int(cells));
}

KLPotential make_potential(const Config& cfg, const PeriodicGrid& grid) {
  const std::string kind = cfg.get_string("potential.kind");
  if (kind == "kl-kernel") {
    GaussianKernel kernel;
    kernel.sigma = cfg.get_double("kernel.sigma", 1.0);
    const auto lengths = cfg.get_double_list("kernel.lengths", {0.5, 0.5});
    kernel.correlation_length[0] = lengths[0];
    kernel.correlation_length[1] = lengths.size() > 1 ? lengths[1] : lengths[0];
    return kl_from_kernel(kernel, grid, int(cfg.get_int("potential.m")));
  }
  const PotentialKind pk = parse_potential_kind(kind);
  const double sigma = cfg.get_double("potential.sigma", 1.0);
  const double beta = cfg.get_double("potential.beta", 0.0);
  const int m = int(cfg.get_int("potential.m"));
  std::vector<double> E;
  if (pk == PotentialKind::Sect5Multiscale)
    E = cfg.get_double_list("potential.E", {1.0 / 9, 1.0 / 13, 1.0 / 11});
  return make_example_1d(pk, grid, sigma, beta, m, E);
}

// Gaussian wave packet of the reference experiments; 2D uses the tensor
// product of the 1D profile.
Vec initial_data(const PeriodicGrid& grid) {
  const double amp = std::pow(10.0 / std::numbers::pi, 0.25);
  Vec psi(grid.node_count());
  for (Index i = 0; i < grid.node_count(); ++i) {
    const auto x = grid.node_position(i);
    double v = amp * std::exp(-20.0 * x[0] * x[0]);
    if (grid.dim() == 2) v *= amp * std::exp(-20.0 * x[1] * x[1]);
    psi[i] = v;
  }
  return psi;
}

double resolve_dt(const Config& cfg, double eps) {
  if (cfg.has("time.dt")) return cfg.get_double("time.dt");
  return eps * cfg.get_double("time.dt-factor", 0.04);
}

SampleMethod online_method(const Config& cfg) {
  return parse_sample_method(cfg.get_string("sampling.method", "sobol"));
}

SamplePlan plan_from_config(const Config& cfg, SampleMethod method, Index n,
                            int m, std::uint64_t seed) {
  SamplePlan plan;
  plan.method = method;
  plan.n = n;
  plan.m = m;
  plan.seed = seed;
  if (method == SampleMethod::ShiftedLattice)
    plan.generating_vector =
        read_generating_vector(cfg.get_string("sampling.generating-vector"));
  return plan;
}

PodCriterion pod_criterion(const Config& cfg) {
  const double rho = cfg.get_double("offline.rho", 0.0);
  if (rho > 0.0) return PodCriterion::energy(rho);
  return PodCriterion::fixed(int(cfg.get_int("offline.pod-modes", 3)));
}

std::filesystem::path out_dir_of(const Config& cfg) {
  auto dir = std::filesystem::path(cfg.get_string("experiment.out", "out"));
  std::filesystem::create_directories(dir);
  return dir;
}

Cache cache_of(const Config& cfg, const std::filesystem::path& out_dir) {
  return Cache(cfg.get_string("experiment.cache", (out_dir / "cache").string()));
}

// ---------------------------------------------------------------------
// output helpers

// Output and cache locations do not influence results, so they stay out of
// the manifest; identical parameters then give byte-identical files no
// matter where they land.
std::string manifest_line(const Config& cfg, const std::string& kind) {
  std::ostringstream os;
  os << "# manifest: experiment=" << kind << "; ";
  for (const auto& [k, v] : cfg.entries()) {
    if (k == "experiment.out" || k == "experiment.cache") continue;
    os << k << "=" << v << ";";
  }
  std::string params = os.str();
  return params + " hash=" + hex64(fnv1a(params));
}

std::filesystem::path write_csv(const std::filesystem::path& dir,
                                const std::string& name,
                                const std::string& manifest,
                                const std::string& header,
                                const std::vector<std::vector<std::string>>& rows) {
  const auto path = dir / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest << "\n" << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
  return path;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt_int(long v) { return std::to_string(v); }

// ---------------------------------------------------------------------
// deterministic streaming pairwise mean with checkpoints

class PairwiseAccumulator {
public:
  void push(CVec v) {
    for (std::size_t lvl = 0;; ++lvl) {
      if (lvl == levels_.size()) {
        levels_.push_back(std::move(v));
        break;
      }
      if (levels_[lvl].size() == 0) {
        levels_[lvl] = std::move(v);
        break;
      }
      v += levels_[lvl];
      levels_[lvl].resize(0);
    }
    ++count_;
  }

  Index count() const { return count_; }

  CVec sum() const {
    CVec acc;
    for (const CVec& lvl : levels_) {
      if (lvl.size() == 0) continue;
      if (acc.size() == 0)
        acc = lvl;
      else
        acc += lvl;
    }
    return acc;
  }

private:
  std::vector<CVec> levels_;
  Index count_ = 0;
};

// ---------------------------------------------------------------------
// checkpointed sample means of the final-time wavefunction

struct MeansRequest {
  const GalerkinSystem* system = nullptr;
  SampleMethod method = SampleMethod::Sobol;
  std::optional<std::vector<std::uint64_t>> generating_vector;
  std::vector<Index> checkpoints;  // ascending sample counts
  std::uint64_t seed = 0;
  const Vec* psi_in = nullptr;
  double T = 1.0;
  double dt = 0.01;
  int m = 1;
  std::string identity;  // cache key material describing everything above
};

using MeanList = std::vector<std::pair<Index, CVec>>;

const CVec& mean_at(const MeanList& means, Index n) {
  for (const auto& [k, v] : means)
    if (k == n) return v;
  throw std::logic_error("no mean checkpoint at n=" + std::to_string(n));
}

MeanList compute_means(const MeansRequest& req, Cache* cache) {
  std::vector<Index> want = req.checkpoints;
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());

  const std::uint64_t key = fnv1a(req.identity);
  if (cache) {
    if (auto stored = cache->load_means(key)) {
      bool all = true;
      for (Index n : want) {
        bool found = false;
        for (const auto& [k, v] : *stored) found |= (k == n);
        all &= found;
      }
      if (all) return *stored;
      for (const auto& [k, v] : *stored)
        if (std::find(want.begin(), want.end(), k) == want.end())
          want.push_back(k);
      std::sort(want.begin(), want.end());
    }
  }

  SamplePlan plan;
  plan.method = req.method;
  plan.n = want.back();
  plan.m = req.m;
  plan.seed = req.seed;
  plan.generating_vector = req.generating_vector;
  const Mat xi = to_xi(generate(plan));

  PairwiseAccumulator acc;
  MeanList out;
  std::size_t next = 0;
  for (Index i = 0; i < plan.n; ++i) {
    const WaveState final_state =
        evolve(*req.system, xi.row(i).transpose(), *req.psi_in, req.T, req.dt);
    acc.push(final_state.c);
    if (next < want.size() && acc.count() == want[next]) {
      const CVec mean_c = acc.sum() / double(want[next]);
      out.push_back({want[next], req.system->reconstruct(mean_c)});
      ++next;
    }
  }
  if (cache) cache->store_means(key, out);
  return out;
}

// ---------------------------------------------------------------------
// offline pipeline with caching

struct OfflineRequest {
  const PeriodicGrid* fine = nullptr;
  const KLPotential* potential = nullptr;
  double eps = 1.0;
  long coarse_cells = 8;
  int l_star = -1;  // -1 = default
  long q_samples = 200;
  SampleMethod method = SampleMethod::Sobol;
  std::uint64_t seed = 0;
  PodCriterion criterion;
  InnerProduct inner_product = InnerProduct::L2;
  bool localized = true;
  ShiftPolicy shift_policy = ShiftPolicy::Auto;
  bool cache_snapshots = true;
};

std::string offline_snap_key(const OfflineRequest& req) {
  std::ostringstream os;
  os << "snap|" << describe(*req.potential) << "|eps=" << fmt(req.eps)
     << "|dim=" << req.fine->dim() << "|h=" << req.fine->cells(0)
     << "|H=" << req.coarse_cells
     << "|l*=" << (req.localized ? req.l_star : -1)
     << "|loc=" << (req.localized ? 1 : 0)
     << "|shift=" << to_string(req.shift_policy)
     << "|Q=" << req.q_samples << "|method=" << to_string(req.method)
     << "|seed=" << req.seed;
  return os.str();
}

std::string offline_rb_suffix(const OfflineRequest& req) {
  std::ostringstream os;
  if (req.criterion.use_ratio)
    os << "|pod=rho" << fmt(req.criterion.rho);
  else
    os << "|pod=fixed" << req.criterion.m_k;
  os << "|ip=" << to_string(req.inner_product);
  return os.str();
}

struct OfflineResult {
  std::vector<ReducedBasisSet> sets;
  std::uint64_t rb_key = 0;
  std::uint64_t snap_key = 0;
  bool rb_hit = false;
  bool snap_hit = false;
  CoarseFineMap map;
};

OfflineResult run_offline(OfflineRequest req, Cache& cache) {
  PeriodicGrid coarse =
      req.fine->dim() == 1
          ? PeriodicGrid::line(-std::numbers::pi, kTwoPi, int(req.coarse_cells))
          : PeriodicGrid::square(-std::numbers::pi, kTwoPi, int(req.coarse_cells));
  CoarseFineMap map(coarse, *req.fine);
  if (req.l_star < 0) req.l_star = default_l_star(map);

  OfflineResult out{.sets = {}, .rb_key = 0, .snap_key = 0, .rb_hit = false,
                    .snap_hit = false, .map = map};
  const std::string snap_str = offline_snap_key(req);
  out.snap_key = fnv1a(snap_str);
  out.rb_key = fnv1a(snap_str + offline_rb_suffix(req));

  if (auto rb = cache.load_reduced(out.rb_key)) {
    out.sets = std::move(*rb);
    out.rb_hit = true;
    return out;
  }

  const SpMat M = assemble_M(*req.fine);
  const SpMat S = assemble_S(*req.fine);
  const auto pod_one = [&](const SnapshotSet& snap) {
    return compute_pod(snap, req.criterion, req.inner_product, M, &S);
  };

  SamplePlan plan;
  plan.method = req.method;
  plan.n = req.q_samples;
  plan.m = req.potential->m;
  plan.seed = req.seed;
  SnapshotOptions opts;
  opts.l_star = req.l_star;
  opts.localized = req.localized;
  opts.shift_policy = req.shift_policy;

  if (auto snaps = cache.load_snapshots(out.snap_key)) {
    out.snap_hit = true;
    for (const auto& snap : *snaps) out.sets.push_back(pod_one(snap));
  } else if (req.cache_snapshots) {
    auto snaps = generate_snapshots(*req.potential, plan, req.eps, map, opts);
    cache.store_snapshots(out.snap_key, snaps);
    for (const auto& snap : snaps) out.sets.push_back(pod_one(snap));
  } else {
    for_each_snapshot_set(*req.potential, plan, req.eps, map, opts,
                          [&](SnapshotSet&& snap) {
                            out.sets.push_back(pod_one(snap));
                          });
  }
  cache.store_reduced(out.rb_key, out.sets);
  return out;
}

// ---------------------------------------------------------------------
// experiment drivers

ExperimentOutput run_converge_h(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const double T = cfg.get_double("time.T", 1.0);
  const double dt = resolve_dt(cfg, eps);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const Vec psi_in = initial_data(fine);

  const SpMat M = assemble_M(fine);
  const SpMat S = assemble_S(fine);

  const long n_online = cfg.get_int("sampling.samples", 2560);
  const long n_ref = cfg.get_int("sampling.reference-samples", 4000);
  const auto coarse_list = cfg.get_int_list("grid.coarse-cells", {32, 64, 128});

  const GalerkinSystem fine_sys = GalerkinSystem::fine(fine, potential, eps);
  MeansRequest ref_req;
  ref_req.system = &fine_sys;
  ref_req.method = online_method(cfg);
  if (ref_req.method == SampleMethod::ShiftedLattice)
    ref_req.generating_vector =
        read_generating_vector(cfg.get_string("sampling.generating-vector"));
  ref_req.checkpoints = {n_ref};
  ref_req.seed = seed;
  ref_req.psi_in = &psi_in;
  ref_req.T = T;
  ref_req.dt = dt;
  ref_req.m = potential.m;
  ref_req.identity = "means|fine|" + describe(potential) + "|h=" +
                     std::to_string(fine.cells(0)) + "|dim=" +
                     std::to_string(fine.dim()) + "|eps=" + fmt(eps) +
                     "|T=" + fmt(T) + "|dt=" + fmt(dt) + "|method=" +
                     to_string(ref_req.method) + "|seed=" + std::to_string(seed);
  const CVec ref_mean = mean_at(compute_means(ref_req, &cache), n_ref);

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  double prev_l2 = 0.0, prev_h1 = 0.0;
  std::vector<std::pair<double, double>> fit_l2, fit_h1;

  for (std::size_t k = 0; k < coarse_list.size(); ++k) {
    const long hc = coarse_list[k];
    OfflineRequest oreq;
    oreq.fine = &fine;
    oreq.potential = &potential;
    oreq.eps = eps;
    oreq.coarse_cells = hc;
    oreq.l_star = int(cfg.get_int("offline.l-star", -1));
    oreq.q_samples = cfg.get_int("offline.samples", 200);
    oreq.method = online_method(cfg);
    oreq.seed = seed;
    oreq.criterion = pod_criterion(cfg);
    oreq.inner_product =
        parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
    oreq.localized = cfg.get_bool("offline.localized", true);
    oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
    oreq.cache_snapshots = fine.dim() == 1;
    OfflineResult off = run_offline(oreq, cache);

    const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);
    MeansRequest mreq = ref_req;
    mreq.system = &sys;
    mreq.checkpoints = {n_online};
    mreq.identity = "means|rb" + hex64(off.rb_key) + "|" + ref_req.identity;
    const CVec mean = mean_at(compute_means(mreq, &cache), n_online);

    const ErrorReport rep = relative_errors(mean, ref_mean, M, S);
    const double H = kTwoPi / double(hc);
    const double order_l2 = k == 0 ? 0.0 : std::log2(prev_l2 / rep.error_l2);
    const double order_h1 = k == 0 ? 0.0 : std::log2(prev_h1 / rep.error_h1);
    prev_l2 = rep.error_l2;
    prev_h1 = rep.error_h1;
    fit_l2.push_back({H, rep.error_l2});
    fit_h1.push_back({H, rep.error_h1});
    rows.push_back({fmt(H), fmt(rep.error_l2), k == 0 ? "" : fmt(order_l2),
                    fmt(rep.error_h1), k == 0 ? "" : fmt(order_h1)});
    out.metrics["error_l2_H" + std::to_string(hc)] = rep.error_l2;
    out.metrics["error_h1_H" + std::to_string(hc)] = rep.error_h1;
  }
  if (fit_l2.size() >= 3) {
    out.metrics["order_fit_l2"] = convergence_rate_fit(fit_l2);
    out.metrics["order_fit_h1"] = convergence_rate_fit(fit_h1);
  }
  out.files.push_back(write_csv(out_dir, "h_table.csv",
                                manifest_line(cfg, "converge-h"),
                                "H,error_l2,order_l2,error_h1,order_h1", rows));
  return out;
}

ExperimentOutput run_converge_pod(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const double T = cfg.get_double("time.T", 1.0);
  const double dt = resolve_dt(cfg, eps);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const Vec psi_in = initial_data(fine);
  const SpMat M = assemble_M(fine);
  const SpMat S = assemble_S(fine);

  const long hc = cfg.get_int("grid.coarse-cells", 128);
  const long n_online = cfg.get_int("sampling.samples", 2560);
  const long n_ref = cfg.get_int("sampling.reference-samples", 4000);
  const auto mk_list = cfg.get_int_list("offline.pod-modes", {1, 2, 3, 4});

  const GalerkinSystem fine_sys = GalerkinSystem::fine(fine, potential, eps);
  MeansRequest ref_req;
  ref_req.system = &fine_sys;
  ref_req.method = online_method(cfg);
  if (ref_req.method == SampleMethod::ShiftedLattice)
    ref_req.generating_vector =
        read_generating_vector(cfg.get_string("sampling.generating-vector"));
  ref_req.checkpoints = {n_ref};
  ref_req.seed = seed;
  ref_req.psi_in = &psi_in;
  ref_req.T = T;
  ref_req.dt = dt;
  ref_req.m = potential.m;
  ref_req.identity = "means|fine|" + describe(potential) + "|h=" +
                     std::to_string(fine.cells(0)) + "|dim=" +
                     std::to_string(fine.dim()) + "|eps=" + fmt(eps) +
                     "|T=" + fmt(T) + "|dt=" + fmt(dt) + "|method=" +
                     to_string(ref_req.method) + "|seed=" + std::to_string(seed);
  const CVec ref_mean = mean_at(compute_means(ref_req, &cache), n_ref);

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  for (long mk : mk_list) {
    OfflineRequest oreq;
    oreq.fine = &fine;
    oreq.potential = &potential;
    oreq.eps = eps;
    oreq.coarse_cells = hc;
    oreq.l_star = int(cfg.get_int("offline.l-star", -1));
    oreq.q_samples = cfg.get_int("offline.samples", 200);
    oreq.method = online_method(cfg);
    oreq.seed = seed;
    oreq.criterion = PodCriterion::fixed(int(mk));
    oreq.inner_product =
        parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
    oreq.localized = cfg.get_bool("offline.localized", true);
    oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
    oreq.cache_snapshots = true;
    OfflineResult off = run_offline(oreq, cache);

    const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);
    MeansRequest mreq = ref_req;
    mreq.system = &sys;
    mreq.checkpoints = {n_online};
    mreq.identity = "means|rb" + hex64(off.rb_key) + "|" + ref_req.identity;
    const CVec mean = mean_at(compute_means(mreq, &cache), n_online);
    const ErrorReport rep = relative_errors(mean, ref_mean, M, S);
    rows.push_back({fmt_int(mk), fmt(rep.error_l2), fmt(rep.error_h1)});
    out.metrics["error_l2_mk" + std::to_string(mk)] = rep.error_l2;
    out.metrics["error_h1_mk" + std::to_string(mk)] = rep.error_h1;
  }
  out.files.push_back(write_csv(out_dir, "pod_table.csv",
                                manifest_line(cfg, "converge-pod"),
                                "pod_modes,error_l2,error_h1", rows));
  return out;
}

ExperimentOutput run_converge_qmc(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const double T = cfg.get_double("time.T", 1.0);
  const double dt = resolve_dt(cfg, eps);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const Vec psi_in = initial_data(fine);
  const SpMat M = assemble_M(fine);
  const SpMat S = assemble_S(fine);

  const long hc = cfg.get_int("grid.coarse-cells", 64);
  const auto n_list = cfg.get_int_list("sampling.samples", {160, 320, 640, 1280, 2560});
  const long n_ref = cfg.get_int("sampling.reference-samples", 8000);
  const long replicates = cfg.get_int("sampling.mc-replicates", 4);

  OfflineRequest oreq;
  oreq.fine = &fine;
  oreq.potential = &potential;
  oreq.eps = eps;
  oreq.coarse_cells = hc;
  oreq.l_star = int(cfg.get_int("offline.l-star", -1));
  oreq.q_samples = cfg.get_int("offline.samples", 200);
  oreq.method = SampleMethod::Sobol;
  oreq.seed = seed;
  oreq.criterion = pod_criterion(cfg);
  oreq.inner_product =
      parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
  oreq.localized = cfg.get_bool("offline.localized", true);
  oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
  oreq.cache_snapshots = true;
  OfflineResult off = run_offline(oreq, cache);
  const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);

  const std::string base_identity =
      "|" + describe(potential) + "|h=" + std::to_string(fine.cells(0)) +
      "|eps=" + fmt(eps) + "|T=" + fmt(T) + "|dt=" + fmt(dt);

  // One Sobol stream provides every checkpoint and the reference mean.
  MeansRequest qreq;
  qreq.system = &sys;
  qreq.method = SampleMethod::Sobol;
  qreq.checkpoints.assign(n_list.begin(), n_list.end());
  qreq.checkpoints.push_back(n_ref);
  qreq.seed = seed;
  qreq.psi_in = &psi_in;
  qreq.T = T;
  qreq.dt = dt;
  qreq.m = potential.m;
  qreq.identity = "means|rb" + hex64(off.rb_key) + base_identity +
                  "|method=sobol|seed=" + std::to_string(seed);
  const MeanList qmc_means = compute_means(qreq, &cache);
  const CVec& ref_mean = mean_at(qmc_means, n_ref);

  // MC error is averaged (RMS) over independent replicate streams.
  std::vector<MeanList> mc_runs;
  for (long r = 0; r < replicates; ++r) {
    MeansRequest mreq = qreq;
    mreq.method = SampleMethod::MonteCarlo;
    mreq.checkpoints.assign(n_list.begin(), n_list.end());
    mreq.seed = seed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(r + 1));
    mreq.identity = "means|rb" + hex64(off.rb_key) + base_identity +
                    "|method=mc|seed=" + std::to_string(mreq.seed);
    mc_runs.push_back(compute_means(mreq, &cache));
  }

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<double, double>> fit_q, fit_mc;
  for (long n : n_list) {
    const double err_q =
        relative_errors(mean_at(qmc_means, n), ref_mean, M, S).error_l2;
    double acc = 0.0;
    for (const auto& run : mc_runs) {
      const double e = relative_errors(mean_at(run, n), ref_mean, M, S).error_l2;
      acc += e * e;
    }
    const double err_mc = std::sqrt(acc / double(mc_runs.size()));
    rows.push_back({fmt_int(n), fmt(err_q), fmt(err_mc)});
    fit_q.push_back({double(n), err_q});
    fit_mc.push_back({double(n), err_mc});
    out.metrics["error_qmc_n" + std::to_string(n)] = err_q;
    out.metrics["error_mc_n" + std::to_string(n)] = err_mc;
  }
  out.metrics["slope_qmc"] = -convergence_rate_fit(fit_q);
  out.metrics["slope_mc"] = -convergence_rate_fit(fit_mc);
  out.files.push_back(write_csv(out_dir, "qmc_table.csv",
                                manifest_line(cfg, "converge-qmc"),
                                "n,error_l2_qmc,error_l2_mc", rows));
  return out;
}

ExperimentOutput run_offline_q(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const double T = cfg.get_double("time.T", 1.0);
  const double dt = resolve_dt(cfg, eps);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const Vec psi_in = initial_data(fine);
  const SpMat M = assemble_M(fine);
  const SpMat S = assemble_S(fine);

  const long hc = cfg.get_int("grid.coarse-cells", 64);
  const long n_online = cfg.get_int("sampling.samples", 2560);
  const long n_ref = cfg.get_int("sampling.reference-samples", 4000);
  const auto q_list = cfg.get_int_list("offline.samples", {10, 100, 200, 400});

  const GalerkinSystem fine_sys = GalerkinSystem::fine(fine, potential, eps);
  MeansRequest ref_req;
  ref_req.system = &fine_sys;
  ref_req.method = online_method(cfg);
  if (ref_req.method == SampleMethod::ShiftedLattice)
    ref_req.generating_vector =
        read_generating_vector(cfg.get_string("sampling.generating-vector"));
  ref_req.checkpoints = {n_ref};
  ref_req.seed = seed;
  ref_req.psi_in = &psi_in;
  ref_req.T = T;
  ref_req.dt = dt;
  ref_req.m = potential.m;
  ref_req.identity = "means|fine|" + describe(potential) + "|h=" +
                     std::to_string(fine.cells(0)) + "|dim=" +
                     std::to_string(fine.dim()) + "|eps=" + fmt(eps) +
                     "|T=" + fmt(T) + "|dt=" + fmt(dt) + "|method=" +
                     to_string(ref_req.method) + "|seed=" + std::to_string(seed);
  const CVec ref_mean = mean_at(compute_means(ref_req, &cache), n_ref);

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  for (long q : q_list) {
    OfflineRequest oreq;
    oreq.fine = &fine;
    oreq.potential = &potential;
    oreq.eps = eps;
    oreq.coarse_cells = hc;
    oreq.l_star = int(cfg.get_int("offline.l-star", -1));
    oreq.q_samples = q;
    oreq.method = SampleMethod::Sobol;
    oreq.seed = seed;
    oreq.criterion = pod_criterion(cfg);
    oreq.inner_product =
        parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
    oreq.localized = cfg.get_bool("offline.localized", true);
    oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
    oreq.cache_snapshots = true;
    OfflineResult off = run_offline(oreq, cache);
    const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);
    MeansRequest mreq = ref_req;
    mreq.system = &sys;
    mreq.checkpoints = {n_online};
    mreq.identity = "means|rb" + hex64(off.rb_key) + "|" + ref_req.identity;
    const CVec mean = mean_at(compute_means(mreq, &cache), n_online);
    const ErrorReport rep = relative_errors(mean, ref_mean, M, S);
    rows.push_back({fmt_int(q), fmt(rep.error_l2), fmt(rep.error_h1)});
    out.metrics["error_l2_Q" + std::to_string(q)] = rep.error_l2;
    out.metrics["error_h1_Q" + std::to_string(q)] = rep.error_h1;
  }
  out.files.push_back(write_csv(out_dir, "q_table.csv",
                                manifest_line(cfg, "offline-q"),
                                "offline_samples,error_l2,error_h1", rows));
  return out;
}

// Shared by the eps- and dimension-scaling studies: fine-grid solves with a
// nested Sobol stream, required n for a fixed error target.
struct ScalingRow {
  double parameter;
  long required_n;
  std::vector<std::pair<long, double>> errors;
};

ScalingRow scaling_required_n(const PeriodicGrid& fine, const KLPotential& potential,
                              double eps, double T, double dt,
                              const std::vector<long>& n_grid, long n_ref,
                              double target, std::uint64_t seed, Cache& cache,
                              const SpMat& M, const SpMat& S, double parameter) {
  const Vec psi_in = initial_data(fine);
  const GalerkinSystem sys = GalerkinSystem::fine(fine, potential, eps);
  MeansRequest req;
  req.system = &sys;
  req.method = SampleMethod::Sobol;
  req.checkpoints.assign(n_grid.begin(), n_grid.end());
  req.checkpoints.push_back(n_ref);
  req.seed = seed;
  req.psi_in = &psi_in;
  req.T = T;
  req.dt = dt;
  req.m = potential.m;
  req.identity = "means|fine|" + describe(potential) + "|h=" +
                 std::to_string(fine.cells(0)) + "|eps=" + fmt(eps) +
                 "|T=" + fmt(T) + "|dt=" + fmt(dt) + "|method=sobol|seed=" +
                 std::to_string(seed);
  const MeanList means = compute_means(req, &cache);
  const CVec& ref = mean_at(means, n_ref);

  ScalingRow row;
  row.parameter = parameter;
  for (long n : n_grid)
    row.errors.push_back(
        {n, relative_errors(mean_at(means, n), ref, M, S).error_l2});

  // Required n: smallest grid point from which the error stays at or below
  // the target for every larger grid point.
  row.required_n = -1;
  for (std::size_t i = 0; i < row.errors.size(); ++i) {
    bool ok = true;
    for (std::size_t j = i; j < row.errors.size(); ++j)
      ok &= row.errors[j].second <= target;
    if (ok) {
      row.required_n = row.errors[i].first;
      break;
    }
  }
  return row;
}

ExperimentOutput run_qmc_scaling(const Config& cfg, bool sweep_eps) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  Config grid_cfg = cfg;
  if (!grid_cfg.has("grid.fine-cells")) grid_cfg.set("grid.fine-cells", "512");
  const PeriodicGrid fine = make_fine_grid(grid_cfg);
  const double T = cfg.get_double("time.T", 1.0);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const SpMat M = assemble_M(fine);
  const SpMat S = assemble_S(fine);

  const std::vector<long> default_grid = {40,  80,   160,  320,  480,  640,
                                          960, 1280, 1920, 2560, 3840, 5120};
  const auto n_grid = cfg.get_int_list("sampling.samples", default_grid);
  const long n_ref = cfg.get_int("sampling.reference-samples", 10240);
  const double target = cfg.get_double("target.error-l2", 4.5e-3);

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> series;

  if (sweep_eps) {
    const auto eps_list =
        cfg.get_double_list("experiment.epsilon", {0.25, 0.125, 0.0625});
    const int m = int(cfg.get_int("potential.m", 8));
    int idx = 0;
    for (double eps : eps_list) {
      Config pc = cfg;
      pc.set("potential.kind", pc.get_string("potential.kind", "decay-1d"));
      pc.set("potential.m", std::to_string(m));
      if (!pc.has("potential.beta")) pc.set("potential.beta", "2");
      const KLPotential potential = make_potential(pc, fine);
      const double dt = resolve_dt(cfg, eps);
      const ScalingRow row =
          scaling_required_n(fine, potential, eps, T, dt, n_grid, n_ref, target,
                             seed, cache, M, S, eps);
      rows.push_back({fmt(eps), fmt_int(row.required_n)});
      for (const auto& [n, e] : row.errors)
        series.push_back({fmt(eps), fmt_int(n), fmt(e)});
      out.metrics["required_n_" + std::to_string(idx)] = double(row.required_n);
      ++idx;
    }
    out.files.push_back(write_csv(out_dir, "eps_table.csv",
                                  manifest_line(cfg, "qmc-eps-scaling"),
                                  "epsilon,required_n", rows));
    out.files.push_back(write_csv(out_dir, "eps_series.csv",
                                  manifest_line(cfg, "qmc-eps-scaling"),
                                  "epsilon,n,error_l2", series));
  } else {
    const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
    const double dt = resolve_dt(cfg, eps);
    const auto m_list = cfg.get_int_list("potential.m", {1, 2, 4, 8});
    int idx = 0;
    for (long m : m_list) {
      Config pc = cfg;
      pc.set("potential.kind", pc.get_string("potential.kind", "decay-1d"));
      pc.set("potential.m", std::to_string(m));
      if (!pc.has("potential.beta")) pc.set("potential.beta", "2");
      const KLPotential potential = make_potential(pc, fine);
      const ScalingRow row =
          scaling_required_n(fine, potential, eps, T, dt, n_grid, n_ref, target,
                             seed, cache, M, S, double(m));
      rows.push_back({fmt_int(m), fmt_int(row.required_n)});
      for (const auto& [n, e] : row.errors)
        series.push_back({fmt_int(m), fmt_int(n), fmt(e)});
      out.metrics["required_n_" + std::to_string(idx)] = double(row.required_n);
      ++idx;
    }
    out.files.push_back(write_csv(out_dir, "m_table.csv",
                                  manifest_line(cfg, "qmc-dim-scaling"),
                                  "m,required_n", rows));
    out.files.push_back(write_csv(out_dir, "m_series.csv",
                                  manifest_line(cfg, "qmc-dim-scaling"),
                                  "m,n,error_l2", series));
  }
  return out;
}

// A(t) series for one potential configuration through the reduced pipeline.
std::vector<std::pair<double, double>> anderson_series(
    const Config& cfg, const PeriodicGrid& fine, const KLPotential& potential,
    double eps, double T, double dt, long coarse_cells, long q_samples, long n,
    int outputs, std::uint64_t seed, Cache& cache) {
  OfflineRequest oreq;
  oreq.fine = &fine;
  oreq.potential = &potential;
  oreq.eps = eps;
  oreq.coarse_cells = coarse_cells;
  oreq.l_star = int(cfg.get_int("offline.l-star", -1));
  oreq.q_samples = q_samples;
  oreq.method = SampleMethod::Sobol;
  oreq.seed = seed;
  oreq.criterion = pod_criterion(cfg);
  oreq.inner_product =
      parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
  oreq.localized = cfg.get_bool("offline.localized", true);
  oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
  oreq.cache_snapshots = fine.dim() == 1;
  OfflineResult off = run_offline(oreq, cache);
  const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);

  const SamplePlan plan =
      plan_from_config(cfg, SampleMethod::Sobol, n, potential.m, seed);
  const Mat xi = to_xi(generate(plan));
  const Vec psi_in = initial_data(fine);

  std::vector<double> times;
  std::vector<double> sums;
  for (Index s = 0; s < n; ++s) {
    const auto traj =
        evolve_trajectory(sys, xi.row(s).transpose(), psi_in, T, dt, outputs);
    if (times.empty()) {
      for (const auto& st : traj) times.push_back(st.t);
      sums.assign(traj.size(), 0.0);
    }
    for (std::size_t k = 0; k < traj.size(); ++k)
      sums[k] += second_moment_single(sys.reconstruct(traj[k]), fine);
  }
  std::vector<std::pair<double, double>> series;
  for (std::size_t k = 0; k < times.size(); ++k)
    series.push_back({times[k], sums[k] / double(n)});
  return series;
}

double series_rel_change(const std::vector<std::pair<double, double>>& series,
                         double t_from) {
  // Relative change of A(t) between the output nearest t_from and the end.
  std::size_t i0 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double d = std::abs(series[i].first - t_from);
    if (d < best) {
      best = d;
      i0 = i;
    }
  }
  const double a0 = series[i0].second;
  const double a1 = series.back().second;
  return std::abs(a1 - a0) / std::abs(a0);
}

ExperimentOutput run_anderson(const Config& cfg, bool two_d) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  Config gc = cfg;
  if (two_d) gc.set("grid.dim", "2");
  if (!gc.has("grid.fine-cells"))
    gc.set("grid.fine-cells", two_d ? "200" : "512");
  const PeriodicGrid fine = make_fine_grid(gc);
  const double eps = cfg.get_double("experiment.epsilon", two_d ? 0.25 : 0.125);
  const double T = cfg.get_double("time.T", 4.0);
  const double dt = cfg.has("time.dt")
                        ? cfg.get_double("time.dt")
                        : eps * cfg.get_double("time.dt-factor", two_d ? 1.0 / 16 : 0.04);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const long coarse_cells = cfg.get_int("grid.coarse-cells", two_d ? 50 : 64);
  const long q_samples = cfg.get_int("offline.samples", two_d ? 48 : 200);
  const long n = cfg.get_int("sampling.samples", two_d ? 32 : 64);
  const int outputs = int(cfg.get_int("experiment.outputs", two_d ? 32 : 48));

  Config pc = cfg;
  pc.set("potential.kind",
         cfg.get_string("potential.kind", two_d ? "anderson-2d" : "anderson-1d"));
  if (!pc.has("potential.sigma")) pc.set("potential.sigma", "5");
  if (!pc.has("potential.beta")) pc.set("potential.beta", "0");
  if (!pc.has("potential.m")) pc.set("potential.m", two_d ? "10" : "15");
  const KLPotential potential = make_potential(pc, fine);

  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;

  const auto main_series = anderson_series(pc, fine, potential, eps, T, dt,
                                           coarse_cells, q_samples, n, outputs,
                                           seed, cache);
  for (const auto& [t, a] : main_series)
    rows.push_back({"disorder", fmt(t), fmt(a)});
  out.metrics["at_change_main"] = series_rel_change(main_series, 0.75 * T);
  out.metrics["at_final_main"] = main_series.back().second;

  const bool with_control = cfg.get_bool("experiment.control-run", !two_d);
  if (with_control) {
    Config cc = pc;
    cc.set("potential.sigma", "0");
    const KLPotential control_pot = make_potential(cc, fine);
    const auto control_series = anderson_series(
        cc, fine, control_pot, eps, T, dt, coarse_cells,
        std::max<long>(2, std::min<long>(q_samples, 8)), 1, outputs, seed, cache);
    for (const auto& [t, a] : control_series)
      rows.push_back({"free", fmt(t), fmt(a)});
    out.metrics["at_change_control"] = series_rel_change(control_series, 0.75 * T);
    out.metrics["at_window_change_control"] =
        series_rel_change(control_series, control_series.front().first);
  }

  out.files.push_back(write_csv(out_dir, "at_series.csv",
                                manifest_line(cfg, two_d ? "anderson-2d" : "anderson-1d"),
                                "run,t,second_moment", rows));
  return out;
}

ExperimentOutput run_decay_diagnostic(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const long coarse_cells = cfg.get_int("grid.coarse-cells", 256);
  const long realizations = cfg.get_int("experiment.realizations", 4);

  PeriodicGrid coarse = PeriodicGrid::line(-std::numbers::pi, kTwoPi, int(coarse_cells));
  CoarseFineMap map(coarse, fine);
  const Index node = coarse_cells / 2;  // coarse node at x = 0
  const int max_layer = int(coarse_cells / 2);

  const SpMat S = assemble_S(fine);
  const SpMat M = assemble_M(fine);
  const SpMat A = assemble_A(map);
  const PotentialBounds vb = bounds(potential);

  SamplePlan plan;
  plan.method = SampleMethod::Sobol;
  plan.n = realizations;
  plan.m = potential.m;
  plan.seed = seed;
  const Mat xi = to_xi(generate(plan));

  PatchFamily patches(map, node, max_layer);
  ExperimentOutput out;
  out.out_dir = out_dir;
  std::vector<std::vector<std::string>> rows;
  double worst_slope = -std::numeric_limits<double>::infinity();
  double worst_r2 = 1.0;
  for (long r = 0; r < realizations; ++r) {
    const PotentialSample samp = sample(potential, xi.row(r).transpose());
    const SpMat V = assemble_V(fine, samp);
    const MultiscaleBasis basis =
        build_with_shift(S, V, M, A, eps, node, std::nullopt, vb.v_min);
    const auto profile = decay_profile(fine, basis, patches);

    std::vector<double> xs, ys;
    for (const auto& [ell, frac] : profile) {
      rows.push_back({fmt_int(r), fmt_int(ell), fmt(frac)});
      if (frac >= cfg.get_double("experiment.decay-floor", 1e-9) &&
          !patches.saturated(ell)) {
        xs.push_back(double(ell));
        ys.push_back(std::log(frac));
      }
    }
    if (xs.size() >= 3) {
      const LinearFit fit = linear_fit(xs, ys);
      out.metrics["slope_r" + std::to_string(r)] = fit.slope;
      out.metrics["r2_r" + std::to_string(r)] = fit.r_squared;
      worst_slope = std::max(worst_slope, fit.slope);
      worst_r2 = std::min(worst_r2, fit.r_squared);
    }
  }
  out.metrics["slope_worst"] = worst_slope;
  out.metrics["r2_worst"] = worst_r2;
  out.files.push_back(write_csv(out_dir, "decay.csv",
                                manifest_line(cfg, "decay-diagnostic"),
                                "realization,layer,residual_fraction", rows));
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const Config& cfg) {
  const std::string kind = cfg.get_string("experiment.kind");
  if (kind == "converge-h") return run_converge_h(cfg);
  if (kind == "converge-pod") return run_converge_pod(cfg);
  if (kind == "converge-qmc") return run_converge_qmc(cfg);
  if (kind == "offline-q") return run_offline_q(cfg);
  if (kind == "qmc-eps-scaling") return run_qmc_scaling(cfg, true);
  if (kind == "qmc-dim-scaling") return run_qmc_scaling(cfg, false);
  if (kind == "anderson-1d") return run_anderson(cfg, false);
  if (kind == "anderson-2d") return run_anderson(cfg, true);
  if (kind == "decay-diagnostic") return run_decay_diagnostic(cfg);
  throw std::invalid_argument("experiment.kind: unknown experiment '" + kind + "'");
}

StageResult stage_basis_build(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));

  OfflineRequest oreq;
  oreq.fine = &fine;
  oreq.potential = &potential;
  oreq.eps = eps;
  oreq.coarse_cells = cfg.get_int("grid.coarse-cells");
  oreq.l_star = int(cfg.get_int("offline.l-star", -1));
  oreq.q_samples = cfg.get_int("offline.samples", 200);
  oreq.method = SampleMethod::Sobol;
  oreq.seed = seed;
  oreq.localized = cfg.get_bool("offline.localized", true);
  oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));

  PeriodicGrid coarse =
      fine.dim() == 1
          ? PeriodicGrid::line(-std::numbers::pi, kTwoPi, int(oreq.coarse_cells))
          : PeriodicGrid::square(-std::numbers::pi, kTwoPi, int(oreq.coarse_cells));
  CoarseFineMap map(coarse, fine);
  if (oreq.l_star < 0) oreq.l_star = default_l_star(map);
  const std::uint64_t snap_key = fnv1a(offline_snap_key(oreq));

  StageResult res;
  res.key = snap_key;
  if (cache.has("snap", snap_key)) {
    res.cache_hit = true;
    res.message = "snapshot cache hit " + hex64(snap_key);
    return res;
  }

  SamplePlan plan;
  plan.method = oreq.method;
  plan.n = oreq.q_samples;
  plan.m = potential.m;
  plan.seed = seed;
  SnapshotOptions opts;
  opts.l_star = oreq.l_star;
  opts.localized = oreq.localized;
  opts.shift_policy = oreq.shift_policy;
  const auto snaps = generate_snapshots(potential, plan, eps, map, opts);
  cache.store_snapshots(snap_key, snaps);
  res.cache_hit = false;
  res.message = "built snapshots " + hex64(snap_key) + " (" +
                std::to_string(snaps.size()) + " nodes)";
  res.metrics["nodes"] = double(snaps.size());
  return res;
}

StageResult stage_pod(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));

  OfflineRequest oreq;
  oreq.fine = &fine;
  oreq.potential = &potential;
  oreq.eps = eps;
  oreq.coarse_cells = cfg.get_int("grid.coarse-cells");
  oreq.l_star = int(cfg.get_int("offline.l-star", -1));
  oreq.q_samples = cfg.get_int("offline.samples", 200);
  oreq.method = SampleMethod::Sobol;
  oreq.seed = seed;
  oreq.criterion = pod_criterion(cfg);
  oreq.inner_product =
      parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
  oreq.localized = cfg.get_bool("offline.localized", true);
  oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
  oreq.cache_snapshots = true;

  const bool had_rb = [&] {
    OfflineRequest probe = oreq;
    PeriodicGrid coarse =
        fine.dim() == 1
            ? PeriodicGrid::line(-std::numbers::pi, kTwoPi, int(probe.coarse_cells))
            : PeriodicGrid::square(-std::numbers::pi, kTwoPi, int(probe.coarse_cells));
    CoarseFineMap map(coarse, fine);
    if (probe.l_star < 0) probe.l_star = default_l_star(map);
    return cache.has("rb", fnv1a(offline_snap_key(probe) + offline_rb_suffix(probe)));
  }();

  OfflineResult off = run_offline(oreq, cache);
  StageResult res;
  res.key = off.rb_key;
  res.cache_hit = had_rb;
  std::ostringstream os;
  os << "reduced basis " << hex64(off.rb_key) << (had_rb ? " (cache hit)" : "")
     << "\n";
  int min_mk = 1 << 30, max_mk = 0;
  for (const auto& set : off.sets) {
    os << "node " << set.node << ": m_k=" << set.mode_count() << "\n";
    min_mk = std::min(min_mk, set.mode_count());
    max_mk = std::max(max_mk, set.mode_count());
  }
  res.message = os.str();
  res.metrics["m_k_min"] = double(min_mk);
  res.metrics["m_k_max"] = double(max_mk);
  return res;
}

ExperimentOutput stage_solve(const Config& cfg) {
  const auto out_dir = out_dir_of(cfg);
  Cache cache = cache_of(cfg, out_dir);
  const PeriodicGrid fine = make_fine_grid(cfg);
  const KLPotential potential = make_potential(cfg, fine);
  const double eps = cfg.get_double("experiment.epsilon", 1.0 / 16);
  const double T = cfg.get_double("time.T", 1.0);
  const double dt = resolve_dt(cfg, eps);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const long n = cfg.get_int("sampling.samples", 16);
  const int outputs = int(cfg.get_int("experiment.outputs", 8));
  const Vec psi_in = initial_data(fine);

  OfflineRequest oreq;
  oreq.fine = &fine;
  oreq.potential = &potential;
  oreq.eps = eps;
  oreq.coarse_cells = cfg.get_int("grid.coarse-cells");
  oreq.l_star = int(cfg.get_int("offline.l-star", -1));
  oreq.q_samples = cfg.get_int("offline.samples", 200);
  oreq.method = SampleMethod::Sobol;
  oreq.seed = seed;
  oreq.criterion = pod_criterion(cfg);
  oreq.inner_product =
      parse_inner_product(cfg.get_string("offline.inner-product", "l2"));
  oreq.localized = cfg.get_bool("offline.localized", true);
  oreq.shift_policy = parse_shift_policy(cfg.get_string("offline.shift", "auto"));
  oreq.cache_snapshots = fine.dim() == 1;
  OfflineResult off = run_offline(oreq, cache);
  const GalerkinSystem sys = GalerkinSystem::reduced(off.sets, fine, potential, eps);

  const SamplePlan plan =
      plan_from_config(cfg, online_method(cfg), n, potential.m, seed);
  const Mat xi = to_xi(generate(plan));

  // Expected wavefunction trajectory over the sample set.
  std::vector<double> times;
  std::vector<CVec> mean_at_time;
  std::vector<std::vector<CVec>> per_time_samples;
  for (Index s = 0; s < n; ++s) {
    const auto traj = evolve_trajectory(sys, xi.row(s).transpose(), psi_in, T, dt, outputs);
    if (times.empty()) {
      for (const auto& st : traj) times.push_back(st.t);
      per_time_samples.resize(traj.size());
    }
    for (std::size_t k = 0; k < traj.size(); ++k)
      per_time_samples[k].push_back(traj[k].c);
  }
  for (auto& samples : per_time_samples)
    mean_at_time.push_back(sys.reconstruct(qmc_mean(samples)));

  ExperimentOutput out;
  out.out_dir = out_dir;
  const std::string format = cfg.get_string("experiment.format", "csv");
  if (format == "csv") {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < times.size(); ++k)
      for (Index i = 0; i < mean_at_time[k].size(); ++i)
        rows.push_back({fmt(times[k]), fmt_int(i), fmt(mean_at_time[k][i].real()),
                        fmt(mean_at_time[k][i].imag())});
    out.files.push_back(write_csv(out_dir, "trajectory.csv",
                                  manifest_line(cfg, "solve"),
                                  "t,index,re,im", rows));
  } else if (format == "binary") {
    const auto path = out_dir / "trajectory.bin";
    std::ofstream bin(path, std::ios::binary);
    const std::uint64_t nt = times.size(), nn = std::uint64_t(fine.node_count());
    bin.write(reinterpret_cast<const char*>(&nt), sizeof nt);
    bin.write(reinterpret_cast<const char*>(&nn), sizeof nn);
    for (std::size_t k = 0; k < times.size(); ++k) {
      bin.write(reinterpret_cast<const char*>(&times[k]), sizeof(double));
      bin.write(reinterpret_cast<const char*>(mean_at_time[k].data()),
                std::streamsize(nn * sizeof(Complex)));
    }
    out.files.push_back(path);
  } else {
    throw std::invalid_argument("experiment.format: expected csv or binary");
  }
  const SpMat M = assemble_M(fine);
  const CVec& last = mean_at_time.back();
  out.metrics["final_l2_norm"] =
      std::sqrt(std::max(0.0, last.dot(M.cast<Complex>() * last).real()));
  out.metrics["outputs"] = double(times.size());
  return out;
}

}  // namespace msrb
