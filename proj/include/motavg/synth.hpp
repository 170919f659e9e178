// Synthetic benchmark: ground-truth scene generation, noise and outlier
// injection, evaluation metrics (e_R, e_t), and the trial / alpha-sweep
// drivers. Everything is deterministic in the scenario seed.

#ifndef MOTAVG_SYNTH_HPP
#define MOTAVG_SYNTH_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "motavg/errors.hpp"
#include "motavg/graph.hpp"
#include "motavg/rng.hpp"
#include "motavg/se3.hpp"
#include "motavg/solver.hpp"

namespace motavg {

inline constexpr double kSceneCubeSide = 10.0;  // translation sampling cube

struct ScenarioSpec {
  std::size_t n_views = 10;
  double edge_density = 0.5;     // fraction of unordered pairs beyond the tree
  double rot_noise_deg = 0.0;    // per-axis rotational noise std dev, degrees
  double trans_noise = 0.0;      // per-axis translational noise std dev
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
};

inline void validate_scenario(const ScenarioSpec& s) {
  if (s.n_views < 2) throw Error("scenario requires at least 2 views");
  if (!(s.edge_density > 0.0 && s.edge_density <= 1.0)) {
    throw Error("edge_density must be in (0,1]");
  }
  if (s.rot_noise_deg < 0.0 || s.trans_noise < 0.0) {
    throw Error("noise levels must be non-negative");
  }
  if (!(s.outlier_fraction >= 0.0 && s.outlier_fraction < 1.0)) {
    throw Error("outlier_fraction must be in [0,1)");
  }
}

struct EvalResult {
  double e_r = 0.0;  // mean Frobenius rotation error
  double e_t = 0.0;  // mean translation error
  std::vector<double> per_view_r;
  std::vector<double> per_view_t;
};

/// Random global motions with view 0 fixed to the identity. Rotation axes
/// uniform on the sphere, angles uniform in [0, pi/2], translations uniform
/// in a cube of side kSceneCubeSide.
inline GlobalMotionSet generate_ground_truth(std::size_t n_views,
                                             std::uint64_t seed) {
  if (n_views < 2) throw Error("generate_ground_truth requires >= 2 views");
  Rng rng(seed);
  GlobalMotionSet out = GlobalMotionSet::identities(n_views);
  const double half = kSceneCubeSide / 2.0;
  for (std::size_t i = 1; i < n_views; ++i) {
    const Vec3 axis = rng.unit_vector();
    const double angle = rng.uniform(0.0, M_PI / 2.0);
    Twist x;
    x.omega = angle * axis;
    Motion m = exp_twist(x);
    m.t = Vec3(rng.uniform(-half, half), rng.uniform(-half, half),
               rng.uniform(-half, half));
    out.motions[i] = m;
  }
  return out;
}

/// Exactly consistent graph over the ground truth: a random spanning tree is
/// always present, each remaining unordered pair is included with probability
/// edge_density. Every edge stores M_ij = M_i^-1 * M_j.
inline MotionGraph make_relative_motions(const GlobalMotionSet& gt,
                                         double edge_density,
                                         std::uint64_t seed) {
  const std::size_t n = gt.size();
  Rng rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  // Random spanning tree: each view links to a uniformly chosen earlier one.
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t parent = rng.below(v);
    pairs.insert({parent, v});
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pairs.count({i, j})) continue;
      if (rng.uniform01() < edge_density) pairs.insert({i, j});
    }
  }
  std::vector<RelativeMotionEdge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    RelativeMotionEdge e;
    e.i = i;
    e.j = j;
    e.measurement = compose(inverse(gt.motions[i]), gt.motions[j]);
    edges.push_back(e);
  }
  return build_graph(n, std::move(edges));
}

/// Right-multiplies each measurement by exp of a random twist: per-axis
/// normal rotational components (degrees converted to radians) and per-axis
/// normal translational components. Zero noise leaves the graph untouched.
inline MotionGraph perturb_edges(const MotionGraph& g, double rot_noise_deg,
                                 double trans_noise, std::uint64_t seed) {
  if (rot_noise_deg == 0.0 && trans_noise == 0.0) return g;
  const double rot_sigma = rot_noise_deg * M_PI / 180.0;
  Rng rng(seed);
  MotionGraph out = g;
  for (auto& e : out.edges) {
    Twist noise;
    noise.omega = Vec3(rng.normal(), rng.normal(), rng.normal()) * rot_sigma;
    noise.u = Vec3(rng.normal(), rng.normal(), rng.normal()) * trans_noise;
    e.measurement = compose(e.measurement, exp_twist(noise));
  }
  return out;
}

namespace detail {

// Edge indices of the breadth-first spanning tree rooted at view 0, matching
// the traversal spanning_tree_init uses.
inline std::set<std::size_t> bfs_tree_edges(const MotionGraph& g) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.n_views);
  for (std::size_t h = 0; h < g.edges.size(); ++h) {
    adj[g.edges[h].i].push_back({g.edges[h].j, h});
    adj[g.edges[h].j].push_back({g.edges[h].i, h});
  }
  std::set<std::size_t> tree;
  std::vector<bool> done(g.n_views, false);
  std::queue<std::size_t> q;
  done[0] = true;
  q.push(0);
  while (!q.empty()) {
    std::size_t v = q.front();
    q.pop();
    for (auto [w, h] : adj[v]) {
      if (done[w]) continue;
      done[w] = true;
      tree.insert(h);
      q.push(w);
    }
  }
  return tree;
}

}  // namespace detail

/// Replaces floor(fraction * H) uniformly chosen non-tree measurements with
/// independent gross random motions (rotation angle uniform in [pi/4, pi],
/// translation uniform in the scene cube). Edges on the breadth-first
/// spanning tree from view 0 are exempt so initialization stays usable.
/// Returns the contaminated graph and the ground-truth outlier labels.
inline std::pair<MotionGraph, std::vector<std::size_t>> inject_outliers(
    const MotionGraph& g, double outlier_fraction, std::uint64_t seed) {
  MotionGraph out = g;
  std::vector<std::size_t> labels;
  const std::size_t want = static_cast<std::size_t>(
      outlier_fraction * static_cast<double>(g.edges.size()));
  if (want == 0) return {out, labels};

  const auto tree = detail::bfs_tree_edges(g);
  std::vector<std::size_t> candidates;
  for (std::size_t h = 0; h < g.edges.size(); ++h) {
    if (!tree.count(h)) candidates.push_back(h);
  }
  Rng rng(seed);
  // Partial Fisher-Yates over the candidate list.
  const std::size_t count = std::min(want, candidates.size());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + rng.below(candidates.size() - k);
    std::swap(candidates[k], candidates[pick]);
    labels.push_back(candidates[k]);
  }
  std::sort(labels.begin(), labels.end());
  const double half = kSceneCubeSide / 2.0;
  for (std::size_t h : labels) {
    Twist x;
    x.omega = rng.uniform(M_PI / 4.0, M_PI) * rng.unit_vector();
    Motion m = exp_twist(x);
    m.t = Vec3(rng.uniform(-half, half), rng.uniform(-half, half),
               rng.uniform(-half, half));
    out.edges[h].measurement = m;
  }
  return {out, labels};
}

/// e_R = mean ||R_est - R_gt||_F, e_t = mean ||t_est - t_gt||_2 over views.
/// Both sets are expected to share the motions[0] = I gauge.
inline EvalResult evaluate(const GlobalMotionSet& est,
                           const GlobalMotionSet& gt) {
  if (est.size() != gt.size()) {
    throw Error("evaluate: length mismatch (" + std::to_string(est.size()) +
                " vs " + std::to_string(gt.size()) + ")");
  }
  EvalResult out;
  const std::size_t n = est.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double er = (est.motions[i].r - gt.motions[i].r).norm();
    const double et = (est.motions[i].t - gt.motions[i].t).norm();
    out.per_view_r.push_back(er);
    out.per_view_t.push_back(et);
    out.e_r += er;
    out.e_t += et;
  }
  out.e_r /= static_cast<double>(n);
  out.e_t /= static_cast<double>(n);
  return out;
}

/// A fully built synthetic scene plus its ground truth and outlier labels.
struct SyntheticScene {
  MotionGraph graph;
  GlobalMotionSet ground_truth;
  std::vector<std::size_t> outlier_labels;
};

inline SyntheticScene build_scene(const ScenarioSpec& spec) {
  validate_scenario(spec);
  Rng seeds(spec.seed);
  const auto gt_seed = seeds.split();
  const auto edge_seed = seeds.split();
  const auto noise_seed = seeds.split();
  const auto outlier_seed = seeds.split();
  SyntheticScene scene;
  scene.ground_truth = generate_ground_truth(spec.n_views, gt_seed);
  scene.graph =
      make_relative_motions(scene.ground_truth, spec.edge_density, edge_seed);
  scene.graph = perturb_edges(scene.graph, spec.rot_noise_deg,
                              spec.trans_noise, noise_seed);
  auto [contaminated, labels] =
      inject_outliers(scene.graph, spec.outlier_fraction, outlier_seed);
  scene.graph = std::move(contaminated);
  scene.outlier_labels = std::move(labels);
  return scene;
}

struct MethodResult {
  std::string method;
  EvalResult eval;
  SolveReport report;
  double runtime_seconds = 0.0;
};

struct TrialResult {
  SyntheticScene scene;
  std::vector<MethodResult> methods;
};

/// Builds the scene and runs the requested modes from the same spanning-tree
/// initialization. Fully determined by (spec, cfg).
inline TrialResult run_trial(const ScenarioSpec& spec, const SolverConfig& cfg,
                             const std::vector<SolverMode>& modes = {
                                 SolverMode::mcc, SolverMode::plain}) {
  TrialResult out;
  out.scene = build_scene(spec);
  const GlobalMotionSet init = spanning_tree_init(out.scene.graph);
  for (SolverMode mode : modes) {
    SolverConfig mode_cfg = cfg;
    mode_cfg.mode = mode;
    const auto start = std::chrono::steady_clock::now();
    auto [globals, report] = run_solver(out.scene.graph, init, mode_cfg);
    const auto stop = std::chrono::steady_clock::now();
    MethodResult mr;
    mr.method = to_string(mode);
    mr.eval = evaluate(globals, out.scene.ground_truth);
    mr.report = std::move(report);
    mr.runtime_seconds =
        std::chrono::duration<double>(stop - start).count();
    out.methods.push_back(std::move(mr));
  }
  return out;
}

struct SweepRow {
  double alpha = 0.0;
  double e_r = 0.0;
  double e_t = 0.0;
  std::size_t iterations = 0;
  Termination termination = Termination::iteration_cap;
  double runtime_seconds = 0.0;
};

/// One MCC run per alpha over the identical scene (same seed, same edges).
inline std::vector<SweepRow> sweep_alpha(const ScenarioSpec& spec,
                                         const std::vector<double>& alphas,
                                         const SolverConfig& cfg) {
  for (double a : alphas) {
    if (!(a > 0.0)) throw Error("alpha values must be positive");
  }
  const SyntheticScene scene = build_scene(spec);
  const GlobalMotionSet init = spanning_tree_init(scene.graph);
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    SolverConfig run_cfg = cfg;
    run_cfg.mode = SolverMode::mcc;
    run_cfg.alpha = a;
    const auto start = std::chrono::steady_clock::now();
    auto [globals, report] = run_solver(scene.graph, init, run_cfg);
    const auto stop = std::chrono::steady_clock::now();
    const EvalResult eval = evaluate(globals, scene.ground_truth);
    rows.push_back({a, eval.e_r, eval.e_t, report.iterations_run,
                    report.termination,
                    std::chrono::duration<double>(stop - start).count()});
  }
  return rows;
}

}  // namespace motavg

#endif  // MOTAVG_SYNTH_HPP
