// Robust motion averaging: correntropy weight assignment, the linearized
// weighted averaging step (log/vec linearization, block system, minimum-norm
// least-squares solve, exponential update), and the outer loop with the
// adaptive kernel width sigma_k = alpha * e_{M,k}.

#ifndef MOTAVG_SOLVER_HPP
#define MOTAVG_SOLVER_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "motavg/errors.hpp"
#include "motavg/graph.hpp"
#include "motavg/se3.hpp"

namespace motavg {

enum class SolverMode { mcc, plain, fixed_weights };

inline std::string to_string(SolverMode m) {
  switch (m) {
    case SolverMode::mcc: return "mcc";
    case SolverMode::plain: return "plain";
    case SolverMode::fixed_weights: return "fixed_weights";
  }
  return "?";
}

struct SolverConfig {
  double alpha = 1.0;
  std::size_t max_iterations = 50;
  double change_tolerance = 1e-10;  // on max twist-parameter magnitude
  double sigma_floor = kSigmaFloor;
  SolverMode mode = SolverMode::mcc;
};

/// Stacked block system D * A = dV. Each 6-row band h holds -w*I6 at block
/// column i and +w*I6 at block column j; the rhs band holds w * dv_ij.
struct LinearSystem {
  Eigen::MatrixXd d;    // 6H x 6N
  Eigen::VectorXd rhs;  // 6H
  std::size_t n_views = 0;
};

enum class Termination { converged, iteration_cap, aborted_nonfinite };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::aborted_nonfinite: return "aborted_nonfinite";
  }
  return "?";
}

struct IterationRecord {
  double residual_error = 0.0;  // e_{M,k} before the step
  double sigma = 0.0;           // kernel width used this iteration
  double max_update = 0.0;      // largest twist entry applied
  std::vector<double> weights;  // per-edge weights used this iteration
};

struct SolveReport {
  std::size_t iterations_run = 0;
  std::vector<IterationRecord> iterations;
  std::vector<double> final_weights;
  Termination termination = Termination::iteration_cap;
};

/// Weight per edge: w_ij = G_sigma(||M_ij - M_i^-1 M_j||_F). Weights are
/// stored back onto the edges and returned.
inline std::vector<double> assign_weights(MotionGraph& g,
                                          const GlobalMotionSet& globals,
                                          const KernelWidth& sigma) {
  std::vector<double> w(g.edges.size());
  for (std::size_t h = 0; h < g.edges.size(); ++h) {
    auto& e = g.edges[h];
    const double res = frobenius_residual(e.measurement, globals.motions[e.i],
                                          globals.motions[e.j]);
    e.weight = gaussian_kernel(res, sigma);
    w[h] = e.weight;
  }
  return w;
}

/// Linearizes every edge about the current globals. The residual relative
/// motion is dM_ij = M_i * M_ij * M_j^-1 and its log supplies the rhs band.
inline LinearSystem build_linear_system(const MotionGraph& g,
                                        const GlobalMotionSet& globals,
                                        const std::vector<double>& weights) {
  const std::size_t n = g.n_views;
  const std::size_t h_count = g.edges.size();
  LinearSystem sys;
  sys.n_views = n;
  sys.d = Eigen::MatrixXd::Zero(6 * h_count, 6 * n);
  sys.rhs = Eigen::VectorXd::Zero(6 * h_count);
  for (std::size_t h = 0; h < h_count; ++h) {
    const auto& e = g.edges[h];
    const double w = weights[h];
    const Motion residual = compose(
        compose(globals.motions[e.i], e.measurement),
        inverse(globals.motions[e.j]));
    Twist dv;
    try {
      dv = log_motion(residual);
    } catch (const AngleNearPiError& err) {
      throw AngleNearPiError("edge " + std::to_string(h) + " (" +
                             std::to_string(e.i) + "," + std::to_string(e.j) +
                             "): " + err.what());
    }
    sys.d.block<6, 6>(6 * h, 6 * e.i) =
        -w * Eigen::Matrix<double, 6, 6>::Identity();
    sys.d.block<6, 6>(6 * h, 6 * e.j) =
        w * Eigen::Matrix<double, 6, 6>::Identity();
    sys.rhs.segment<6>(6 * h) = w * dv.vector();
  }
  return sys;
}

/// Minimum-norm least-squares solution of the stacked system via a
/// rank-revealing complete orthogonal decomposition. The system has a
/// 6-dimensional gauge null space; rank below 6(N-1) signals a disconnected
/// or degenerate graph.
inline Eigen::VectorXd solve_min_norm(const LinearSystem& sys) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.d);
  const auto rank = cod.rank();
  const auto expected = static_cast<Eigen::Index>(6 * (sys.n_views - 1));
  if (rank < expected) {
    throw RankDeficientError(
        "system rank " + std::to_string(rank) + " below " +
        std::to_string(expected) +
        "; graph is disconnected or degenerate beyond the gauge freedom");
  }
  return cod.solve(sys.rhs);
}

/// M_i <- exp(dv_i - dv_0) * M_i for i >= 1; view 0 is the gauge and never
/// moves. Left composition matches the linearization: the residual relative
/// motion M_i * M_ij * M_j^-1 factors as (dM_i)^-1 * dM_j with dM_i the left
/// residual, so the solved twists are corrections in the reference frame.
/// Subtracting the view-0 block shifts the minimum-norm solution along the
/// gauge null direction onto the representative with dv_0 = 0; the result
/// equals the least-squares solution of the system with view 0 pinned.
/// Discarding dv_0 instead would leave a common-mode error that contracts
/// only by (N-1)/N per iteration.
inline GlobalMotionSet apply_update(const GlobalMotionSet& globals,
                                    const Eigen::VectorXd& solution) {
  GlobalMotionSet out = globals;
  const Vec6 gauge_block = solution.segment<6>(0);
  for (std::size_t i = 1; i < globals.size(); ++i) {
    const Twist dv =
        Twist::from_vector(solution.segment<6>(6 * i) - gauge_block);
    out.motions[i] = compose(exp_twist(dv), globals.motions[i]);
  }
  return out;
}

/// One weighted Gauss-style iteration. Returns the updated globals and the
/// largest twist entry over the applied blocks (i >= 1).
inline std::pair<GlobalMotionSet, double> weighted_ma_step(
    const MotionGraph& g, const GlobalMotionSet& globals,
    const std::vector<double>& weights) {
  const LinearSystem sys = build_linear_system(g, globals, weights);
  const Eigen::VectorXd solution = solve_min_norm(sys);
  double max_update = 0.0;
  const Eigen::Matrix<double, 6, 1> gauge_block = solution.segment<6>(0);
  for (std::size_t i = 1; i < globals.size(); ++i) {
    const double block_max =
        (solution.segment<6>(6 * i) - gauge_block).cwiseAbs().maxCoeff();
    max_update = std::max(max_update, block_max);
  }
  return {apply_update(globals, solution), max_update};
}

namespace detail {

inline bool all_finite(const GlobalMotionSet& globals) {
  for (const auto& m : globals.motions) {
    if (!m.r.allFinite() || !m.t.allFinite()) return false;
  }
  return true;
}

}  // namespace detail

/// The outer alternating loop. Per iteration: residual error e_{M,k}, kernel
/// width sigma_k = alpha * e_{M,k} (mcc mode), weight assignment, then one
/// weighted averaging step. Stops when the update magnitude falls below
/// change_tolerance or the iteration cap is reached.
inline std::pair<GlobalMotionSet, SolveReport> run_solver(
    const MotionGraph& graph, const GlobalMotionSet& init,
    const SolverConfig& cfg) {
  if (!is_connected(graph)) {
    throw DisconnectedError("solver requires a connected graph");
  }
  if (init.size() != graph.n_views) {
    throw SolverError("initial guess has " + std::to_string(init.size()) +
                      " motions for " + std::to_string(graph.n_views) +
                      " views");
  }
  MotionGraph g = graph;  // local copy: weights are written onto edges
  GlobalMotionSet globals = init;
  SolveReport report;
  report.termination = Termination::iteration_cap;

  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    IterationRecord rec;
    rec.residual_error = residual_motion_error(g, globals);
    const KernelWidth sigma(std::max(cfg.alpha * rec.residual_error,
                                     cfg.sigma_floor));
    rec.sigma = sigma.value();
    switch (cfg.mode) {
      case SolverMode::mcc:
        rec.weights = assign_weights(g, globals, sigma);
        break;
      case SolverMode::plain:
        rec.weights.assign(g.edges.size(), 1.0);
        break;
      case SolverMode::fixed_weights:
        rec.weights.reserve(g.edges.size());
        for (const auto& e : g.edges) rec.weights.push_back(e.weight);
        break;
    }
    auto [updated, max_update] = weighted_ma_step(g, globals, rec.weights);
    rec.max_update = max_update;
    report.iterations.push_back(rec);
    report.iterations_run = k;
    if (!detail::all_finite(updated)) {
      report.termination = Termination::aborted_nonfinite;
      report.final_weights = rec.weights;
      throw NonFiniteError("non-finite iterate at iteration " +
                           std::to_string(k));
    }
    globals = std::move(updated);
    if (max_update < cfg.change_tolerance) {
      report.termination = Termination::converged;
      break;
    }
  }
  if (!report.iterations.empty()) {
    report.final_weights = report.iterations.back().weights;
  }
  return {globals, report};
}

inline std::pair<GlobalMotionSet, SolveReport> mcc_motion_averaging(
    const MotionGraph& g, const GlobalMotionSet& init, SolverConfig cfg) {
  cfg.mode = SolverMode::mcc;
  return run_solver(g, init, cfg);
}

inline std::pair<GlobalMotionSet, SolveReport> plain_ma(
    const MotionGraph& g, const GlobalMotionSet& init, SolverConfig cfg) {
  cfg.mode = SolverMode::plain;
  return run_solver(g, init, cfg);
}

}  // namespace motavg

#endif  // MOTAVG_SOLVER_HPP
