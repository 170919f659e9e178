// Acceptance suite: one test case per criterion, each printing a single
// pass/fail line with the measured quantities.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <vector>

#include "motavg/graph.hpp"
#include "motavg/io.hpp"
#include "motavg/solver.hpp"
#include "motavg/synth.hpp"
#include "test_util.hpp"

using namespace motavg;
using namespace motavg::testutil;

namespace {

void report_line(const std::string& id, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ": " << detail
            << std::endl;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ScenarioSpec contaminated_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n_views = 15;
  spec.edge_density = 0.45;
  spec.rot_noise_deg = 0.3;
  spec.trans_noise = 0.05;
  spec.outlier_fraction = 0.15;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("A1 exact recovery from a perturbed initialization") {
  int passed = 0;
  double worst_time = 0.0;
  std::size_t worst_iters = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioSpec spec;
    spec.n_views = 12;
    spec.edge_density = 0.5;
    spec.seed = seed;
    const auto scene = build_scene(spec);
    GlobalMotionSet init = spanning_tree_init(scene.graph);
    Rng rng(seed + 777);
    for (std::size_t i = 1; i < init.size(); ++i) {
      Vec6 dir;
      for (int k = 0; k < 6; ++k) dir(k) = rng.normal();
      dir *= 0.1 / dir.norm();  // twist of magnitude 0.1
      init.motions[i] = compose(init.motions[i],
                                exp_twist(Twist::from_vector(dir)));
    }
    SolverConfig cfg;
    cfg.max_iterations = 30;
    const auto start = std::chrono::steady_clock::now();
    auto [globals, report] = mcc_motion_averaging(scene.graph, init, cfg);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    const auto eval = evaluate(globals, scene.ground_truth);
    worst_time = std::max(worst_time, secs);
    worst_iters = std::max(worst_iters, report.iterations_run);
    if (eval.e_r < 1e-8 && eval.e_t < 1e-8 && report.iterations_run <= 30 &&
        secs < 1.0) {
      ++passed;
    }
  }
  const bool ok = passed == 10;
  report_line("A1", ok,
              std::to_string(passed) + "/10 seeds recovered exactly (max " +
                  std::to_string(worst_iters) + " iterations, max " +
                  std::to_string(worst_time) + " s)");
  CHECK(ok);
}

TEST_CASE("A2 outlier robustness against plain MA and the noise floor") {
  const auto total_start = std::chrono::steady_clock::now();
  std::vector<double> mcc_er, plain_er, floor_er;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = contaminated_spec(seed);
    const auto trial = run_trial(spec, SolverConfig{});
    mcc_er.push_back(trial.methods[0].eval.e_r);
    plain_er.push_back(trial.methods[1].eval.e_r);

    auto clean = spec;
    clean.outlier_fraction = 0.0;
    const auto clean_trial =
        run_trial(clean, SolverConfig{}, {SolverMode::mcc});
    floor_er.push_back(clean_trial.methods[0].eval.e_r);
  }
  const double total_secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - total_start)
                                .count();
  const double med_mcc = median(mcc_er);
  const double med_plain = median(plain_er);
  const double med_floor = median(floor_er);
  const bool ok = med_mcc <= med_plain && med_mcc <= 3.0 * med_floor &&
                  total_secs < 30.0;
  report_line("A2", ok,
              "median e_R mcc=" + std::to_string(med_mcc) +
                  " plain=" + std::to_string(med_plain) +
                  " noise floor=" + std::to_string(med_floor) + " (" +
                  std::to_string(total_secs) + " s total)");
  CHECK(med_mcc <= med_plain);
  CHECK(med_mcc <= 3.0 * med_floor);
  CHECK(total_secs < 30.0);
}

TEST_CASE("A3 alpha stability across [0.4, 2.0]") {
  const auto spec = contaminated_spec(3);
  SolverConfig cfg;
  const std::vector<double> alphas{0.4, 0.7, 1.0, 1.5, 2.0};
  const auto rows = sweep_alpha(spec, alphas, cfg);
  double lo = rows[0].e_r, hi = rows[0].e_r;
  bool all_converged = true;
  for (const auto& r : rows) {
    lo = std::min(lo, r.e_r);
    hi = std::max(hi, r.e_r);
    if (r.termination != Termination::converged) all_converged = false;
  }
  const double ratio = hi / lo;
  const bool ok = ratio <= 2.0 && all_converged;
  report_line("A3", ok,
              "max/min e_R ratio " + std::to_string(ratio) +
                  (all_converged ? ", all alphas converged"
                                 : ", NOT all alphas converged"));
  CHECK(ratio <= 2.0);
  CHECK(all_converged);
}

TEST_CASE("A4 fixed unit weights reproduce plain MA iterate-for-iterate") {
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioSpec spec;
    spec.n_views = 8;
    spec.edge_density = 0.5;
    spec.rot_noise_deg = 0.5;
    spec.trans_noise = 0.05;
    spec.outlier_fraction = 0.1;
    spec.seed = seed;
    const auto scene = build_scene(spec);
    const auto init = spanning_tree_init(scene.graph);
    SolverConfig cfg;
    cfg.max_iterations = 15;
    auto [pg, pr] = plain_ma(scene.graph, init, cfg);
    cfg.mode = SolverMode::fixed_weights;
    auto [fg, fr] = run_solver(scene.graph, init, cfg);
    if (pr.iterations_run != fr.iterations_run) {
      ok = false;
      continue;
    }
    for (std::size_t k = 0; k < pr.iterations.size(); ++k) {
      if (std::abs(pr.iterations[k].residual_error -
                   fr.iterations[k].residual_error) > 1e-12 ||
          std::abs(pr.iterations[k].max_update -
                   fr.iterations[k].max_update) > 1e-12) {
        ok = false;
      }
    }
    for (std::size_t i = 0; i < pg.size(); ++i) {
      if ((pg.motions[i].matrix() - fg.motions[i].matrix()).norm() > 1e-12) {
        ok = false;
      }
    }
  }
  report_line("A4", ok, "10 scenarios compared at 1e-12");
  CHECK(ok);
}

TEST_CASE("A5 stored weights match the kernel formula on every iteration") {
  bool ok = true;
  double worst = 0.0;
  auto check_run = [&](const MotionGraph& graph, GlobalMotionSet globals,
                       const SolverConfig& cfg, const SolveReport& report) {
    for (const auto& rec : report.iterations) {
      const double e_m = residual_motion_error(graph, globals);
      const double sigma = std::max(cfg.alpha * e_m, cfg.sigma_floor);
      worst = std::max(worst, std::abs(sigma - rec.sigma));
      if (std::abs(sigma - rec.sigma) > 1e-14) ok = false;
      for (std::size_t h = 0; h < graph.n_edges(); ++h) {
        const auto& e = graph.edges[h];
        const double res = frobenius_residual(
            e.measurement, globals.motions[e.i], globals.motions[e.j]);
        const double w = std::exp(-(res * res) / (2.0 * sigma * sigma));
        worst = std::max(worst, std::abs(w - rec.weights[h]));
        if (std::abs(w - rec.weights[h]) > 1e-14) ok = false;
      }
      globals = weighted_ma_step(graph, globals, rec.weights).first;
    }
  };

  // A1-style clean run and A2/A3-style contaminated runs.
  {
    ScenarioSpec spec;
    spec.n_views = 12;
    spec.edge_density = 0.5;
    spec.seed = 3;
    const auto scene = build_scene(spec);
    const auto init = spanning_tree_init(scene.graph);
    SolverConfig cfg;
    auto [g, report] = mcc_motion_averaging(scene.graph, init, cfg);
    check_run(scene.graph, init, cfg, report);
  }
  for (std::uint64_t seed : {0ull, 7ull, 11ull}) {
    const auto spec = contaminated_spec(seed);
    for (double alpha : {0.4, 1.0, 2.0}) {
      const auto scene = build_scene(spec);
      const auto init = spanning_tree_init(scene.graph);
      SolverConfig cfg;
      cfg.alpha = alpha;
      auto [g, report] = mcc_motion_averaging(scene.graph, init, cfg);
      check_run(scene.graph, init, cfg, report);
    }
  }
  report_line("A5", ok,
              "max deviation " + std::to_string(worst) + " (tolerance 1e-14)");
  CHECK(ok);
}

TEST_CASE("A6 two-view single-edge closed form") {
  bool ok = true;
  Rng rng(66);
  for (int trial = 0; trial < 100; ++trial) {
    const Motion rel = random_motion(rng, M_PI - 0.2);
    const auto g = build_graph(2, [&] {
      RelativeMotionEdge e;
      e.i = 0;
      e.j = 1;
      e.measurement = rel;
      return std::vector<RelativeMotionEdge>{e};
    }());
    GlobalMotionSet globals = GlobalMotionSet::identities(2);
    for (int k = 0; k < 3; ++k) {
      const Motion residual = compose(compose(globals.motions[0], rel),
                                      inverse(globals.motions[1]));
      const Vec6 v = log_motion(residual).vector();
      // Closed form: the one-constraint min-norm solution splits -v/2 / +v/2.
      const auto sys = build_linear_system(g, globals, {1.0});
      const auto sol = solve_min_norm(sys);
      if ((sol.head<6>() + v / 2).cwiseAbs().maxCoeff() > 1e-10) ok = false;
      if ((sol.tail<6>() - v / 2).cwiseAbs().maxCoeff() > 1e-10) ok = false;
      globals = apply_update(globals, sol);
      // The applied increment is the gauge-shifted solution v, so M1 reaches
      // the measurement after the first step and stays there.
      const double dist =
          log_motion(compose(inverse(globals.motions[1]), rel))
              .vector()
              .norm();
      if (dist > 1e-10) ok = false;
    }
  }
  report_line("A6", ok, "100 random single-edge problems, 3 steps each");
  CHECK(ok);
}

TEST_CASE("A7 numerics property suite") {
  bool ok = true;
  std::string detail;

  {  // exp/log roundtrip
    Rng rng(71);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Twist x = random_twist(rng);
      worst = std::max(worst, (log_motion(exp_twist(x)).vector() - x.vector())
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    if (worst >= 1e-9) ok = false;
    detail += "roundtrip max " + std::to_string(worst);
  }
  {  // group axioms
    Rng rng(72);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Motion a = random_motion(rng);
      const Motion b = random_motion(rng);
      const Motion c = random_motion(rng);
      worst = std::max(worst, (compose(compose(a, b), c).matrix() -
                               compose(a, compose(b, c)).matrix())
                                  .norm());
      worst = std::max(
          worst, (compose(a, inverse(a)).matrix() - Mat4::Identity()).norm());
    }
    if (worst >= 1e-10) ok = false;
    detail += ", group axioms max " + std::to_string(worst);
  }
  {  // gauge invariance of residual_motion_error
    Rng rng(73);
    GlobalMotionSet globals = GlobalMotionSet::identities(6);
    for (std::size_t i = 1; i < 6; ++i) globals.motions[i] = random_motion(rng);
    std::vector<RelativeMotionEdge> edges;
    for (std::size_t i = 0; i < 5; ++i) {
      RelativeMotionEdge e;
      e.i = i;
      e.j = i + 1;
      e.measurement = compose(compose(inverse(globals.motions[i]),
                                      globals.motions[i + 1]),
                              rot_z(0.1));
      edges.push_back(e);
    }
    const auto g = build_graph(6, std::move(edges));
    const double base = residual_motion_error(g, globals);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Motion gauge = random_motion(rng);
      GlobalMotionSet moved = globals;
      for (auto& m : moved.motions) m = compose(gauge, m);
      worst = std::max(worst,
                       std::abs(residual_motion_error(g, moved) - base));
    }
    if (worst >= 1e-10) ok = false;
    detail += ", gauge invariance max " + std::to_string(worst);
  }
  {  // weight-scale invariance of solve_min_norm
    Rng rng(74);
    GlobalMotionSet gt = GlobalMotionSet::identities(6);
    for (std::size_t i = 1; i < 6; ++i) gt.motions[i] = random_motion(rng);
    std::vector<RelativeMotionEdge> edges;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = i + 1; j < 6; ++j) {
        RelativeMotionEdge e;
        e.i = i;
        e.j = j;
        e.measurement = compose(inverse(gt.motions[i]), gt.motions[j]);
        edges.push_back(e);
      }
    }
    const auto g = build_graph(6, std::move(edges));
    GlobalMotionSet perturbed = gt;
    perturbed.motions[2] = compose(perturbed.motions[2], rot_z(0.1));
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> w(g.n_edges());
      for (auto& wi : w) wi = rng.uniform(0.1, 1.0);
      const auto a = solve_min_norm(build_linear_system(g, perturbed, w));
      const double c = rng.uniform(0.5, 10.0);
      for (auto& wi : w) wi *= c;
      const auto b = solve_min_norm(build_linear_system(g, perturbed, w));
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    if (worst >= 1e-10) ok = false;
    detail += ", weight-scale max " + std::to_string(worst);
  }
  report_line("A7", ok, detail);
  CHECK(ok);
}

TEST_CASE("A8 i/o fidelity") {
  bool ok = true;

  Rng rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(6);
    GlobalMotionSet gt = GlobalMotionSet::identities(n);
    for (std::size_t i = 1; i < n; ++i) gt.motions[i] = random_motion(rng);
    std::vector<RelativeMotionEdge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (j > i + 1 && rng.uniform01() < 0.4) continue;
        RelativeMotionEdge e;
        e.i = i;
        e.j = j;
        e.measurement = compose(inverse(gt.motions[i]), gt.motions[j]);
        e.weight = rng.uniform(1e-6, 1.0);
        edges.push_back(e);
      }
    }
    const auto g = build_graph(n, std::move(edges));

    const auto g2o_back = parse_g2o(write_g2o(g, &gt));
    if (g2o_back.graph.n_edges() != g.n_edges()) ok = false;
    for (std::size_t h = 0; h < g.n_edges(); ++h) {
      if ((g2o_back.graph.edges[h].measurement.r - g.edges[h].measurement.r)
                  .norm() >= 1e-9 ||
          (g2o_back.graph.edges[h].measurement.t - g.edges[h].measurement.t)
                  .norm() >= 1e-9) {
        ok = false;
      }
    }

    const auto json_back = parse_json(write_json(g, &gt));
    for (std::size_t h = 0; h < g.n_edges(); ++h) {
      if (json_back.graph.edges[h].measurement.r != g.edges[h].measurement.r ||
          json_back.graph.edges[h].measurement.t != g.edges[h].measurement.t ||
          json_back.graph.edges[h].weight != g.edges[h].weight) {
        ok = false;
      }
    }
  }

  // The three parse-error examples must fail with diagnostics.
  int diagnostics = 0;
  try {
    parse_g2o(std::string("EDGE_SE3:QUAT 0 1 0 0 0 2 0 0 0\n"));
  } catch (const ParseError& e) {
    if (std::string(e.what()).find("line 1") != std::string::npos) {
      ++diagnostics;
    }
  }
  try {
    parse_json(R"({"edges": []})");
  } catch (const ParseError& e) {
    if (std::string(e.what()).find("n_views") != std::string::npos) {
      ++diagnostics;
    }
  }
  try {
    parse_json(
        R"({"n_views": 2, "edges": [{"i":0,"j":1,"r":[1],"t":[0,0,0]}]})");
  } catch (const ParseError& e) {
    if (std::string(e.what()).find("edges[0].r") != std::string::npos) {
      ++diagnostics;
    }
  }
  if (diagnostics != 3) ok = false;

  report_line("A8", ok,
              "100 random graph roundtrips, " + std::to_string(diagnostics) +
                  "/3 diagnostics verified");
  CHECK(ok);
}
