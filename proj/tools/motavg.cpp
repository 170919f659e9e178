// Command-line front end: `average` (run the solver on a pose-graph file),
// `synth` (generate a contaminated synthetic scene), `sweep` (alpha
// sensitivity table), and `eval` (compare two global motion sets).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "motavg/graph.hpp"
#include "motavg/io.hpp"
#include "motavg/se3.hpp"
#include "motavg/solver.hpp"
#include "motavg/synth.hpp"

namespace {

using namespace motavg;

enum class FileFormat { g2o, json };

FileFormat sniff_format(const std::string& path, const std::string& override) {
  if (override == "g2o") return FileFormat::g2o;
  if (override == "json") return FileFormat::json;
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".g2o") return FileFormat::g2o;
  if (ext == ".json") return FileFormat::json;
  throw Error("cannot determine format of '" + path +
              "' from its extension; pass --format g2o|json");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All output goes through a temporary-then-rename so a failure never leaves
// a partial file behind.
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

ParsedGraph load_graph(const std::string& path, const std::string& fmt) {
  const std::string text = read_file(path);
  if (sniff_format(path, fmt) == FileFormat::g2o) {
    ParsedGraph pg = parse_g2o(text);
    for (const auto& w : pg.warnings) std::cerr << path << ": " << w << "\n";
    return pg;
  }
  ParsedJson pj = parse_json(text);
  return ParsedGraph{std::move(pj.graph), std::move(pj.globals), {}};
}

std::string describe_components(const MotionGraph& g) {
  const auto label = motavg::detail::component_labels(g);
  std::map<int, std::vector<std::size_t>> comps;
  for (std::size_t v = 0; v < label.size(); ++v) comps[label[v]].push_back(v);
  std::string msg = "graph has " + std::to_string(comps.size()) +
                    " connected components:";
  for (const auto& [c, views] : comps) {
    msg += " {";
    for (std::size_t k = 0; k < views.size(); ++k) {
      if (k) msg += ",";
      msg += std::to_string(views[k]);
    }
    msg += "}";
  }
  return msg;
}

std::string eval_to_json(const EvalResult& r) {
  nlohmann::json j;
  j["e_r"] = r.e_r;
  j["e_t"] = r.e_t;
  j["per_view_r"] = r.per_view_r;
  j["per_view_t"] = r.per_view_t;
  return j.dump(2) + "\n";
}

int cmd_average(const std::string& input, const std::string& init_path,
                const std::string& fmt, const std::string& init_fmt,
                const SolverConfig& cfg, const std::string& out_path,
                const std::string& out_fmt, const std::string& report_path) {
  ParsedGraph pg = load_graph(input, fmt);
  if (!is_connected(pg.graph)) {
    std::cerr << "error: " << describe_components(pg.graph) << "\n";
    return 1;
  }
  GlobalMotionSet init;
  if (!init_path.empty()) {
    ParsedGraph pi = load_graph(init_path, init_fmt);
    if (!pi.globals) {
      std::cerr << "error: init file '" << init_path
                << "' carries no global motions\n";
      return 1;
    }
    init = *pi.globals;
  } else if (pg.globals) {
    init = *pg.globals;
  } else {
    init = spanning_tree_init(pg.graph);
  }
  auto [globals, report] = run_solver(pg.graph, init, cfg);

  std::string rendered;
  FileFormat of = FileFormat::json;
  if (!out_path.empty()) of = sniff_format(out_path, out_fmt);
  else if (out_fmt == "g2o") of = FileFormat::g2o;
  if (of == FileFormat::g2o) {
    rendered = write_g2o(pg.graph, &globals);
  } else {
    rendered = write_json(pg.graph, &globals, &report);
  }
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    write_file_atomic(out_path, rendered);
  }
  if (!report_path.empty()) {
    write_file_atomic(report_path, write_json(pg.graph, &globals, &report));
  }
  return report.termination == Termination::converged ? 0 : 2;
}

int cmd_synth(const ScenarioSpec& spec, const std::string& out_prefix) {
  validate_scenario(spec);
  const SyntheticScene scene = build_scene(spec);
  write_file_atomic(out_prefix + "graph.g2o", write_g2o(scene.graph));
  {
    MotionGraph empty;
    empty.n_views = scene.ground_truth.size();
    write_file_atomic(out_prefix + "ground_truth.g2o",
                      write_g2o(empty, &scene.ground_truth));
  }
  std::string labels;
  for (std::size_t h : scene.outlier_labels) {
    labels += std::to_string(h) + "\n";
  }
  write_file_atomic(out_prefix + "outliers.txt", labels);
  return 0;
}

int cmd_sweep(const ScenarioSpec& spec, const std::vector<double>& alphas,
              const SolverConfig& cfg, const std::string& out_path) {
  const auto rows = sweep_alpha(spec, alphas, cfg);
  std::ostringstream out;
  out << "# seed " << spec.seed << "\n";
  out << "# seed\tmethod\talpha\titerations\te_r\te_t\truntime_s\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%llu\tmcc\t%.17g\t%zu\t%.17g\t%.17g\t%.6f\n",
                  static_cast<unsigned long long>(spec.seed), r.alpha,
                  r.iterations, r.e_r, r.e_t, r.runtime_seconds);
    out << buf;
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file_atomic(out_path, out.str());
  }
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path,
             const std::string& fmt) {
  ParsedGraph est = load_graph(est_path, fmt);
  ParsedGraph gt = load_graph(gt_path, fmt);
  if (!est.globals || !gt.globals) {
    std::cerr << "error: both files must carry global motions\n";
    return 1;
  }
  const EvalResult r = evaluate(*est.globals, *gt.globals);
  std::cout << eval_to_json(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust motion averaging over SE(3) view graphs"};
  app.require_subcommand(1);

  SolverConfig cfg;
  ScenarioSpec spec;
  std::string method = "mcc";
  std::string input, init_path, out_path, report_path;
  std::string fmt, init_fmt, out_fmt;
  std::string out_prefix;
  std::vector<double> alphas{1.0};

  auto add_solver_flags = [&](CLI::App* c) {
    c->add_option("--method", method, "Solver mode: mcc, plain, fixed")
        ->default_val("mcc")
        ->check(CLI::IsMember({"mcc", "plain", "fixed"}));
    c->add_option("--alpha", cfg.alpha, "Kernel width multiplier")
        ->default_val(1.0)
        ->check(CLI::PositiveNumber);
    c->add_option("--max-iters", cfg.max_iterations, "Iteration cap")
        ->default_val(50);
    c->add_option("--tol", cfg.change_tolerance,
                  "Stop when the max twist update falls below this")
        ->default_val(1e-10)
        ->check(CLI::PositiveNumber);
  };
  auto add_scenario_flags = [&](CLI::App* c) {
    c->add_option("--views", spec.n_views, "Number of views (>= 2)")
        ->default_val(10);
    c->add_option("--density", spec.edge_density,
                  "Fraction of extra unordered pairs given edges, (0,1]")
        ->default_val(0.5);
    c->add_option("--rot-noise", spec.rot_noise_deg,
                  "Per-axis rotational noise std dev, degrees")
        ->default_val(0.0);
    c->add_option("--trans-noise", spec.trans_noise,
                  "Per-axis translational noise std dev, scene units")
        ->default_val(0.0);
    c->add_option("--outliers", spec.outlier_fraction,
                  "Fraction of edges replaced by gross outliers, [0,1)")
        ->default_val(0.0);
    c->add_option("--seed", spec.seed, "RNG seed")->default_val(0);
  };

  auto* avg = app.add_subcommand(
      "average", "Recover global motions from a relative-motion file");
  avg->add_option("input", input, "Graph file (.g2o or .json)")->required();
  avg->add_option("--init", init_path,
                  "Initial global motions file (default: file vertices, "
                  "else spanning-tree chaining)");
  avg->add_option("--format", fmt, "Input format override: g2o or json")
      ->check(CLI::IsMember({"g2o", "json"}));
  avg->add_option("--init-format", init_fmt, "Init file format override")
      ->check(CLI::IsMember({"g2o", "json"}));
  avg->add_option("--out", out_path, "Output file (default: stdout, JSON)");
  avg->add_option("--out-format", out_fmt, "Output format override")
      ->check(CLI::IsMember({"g2o", "json"}));
  avg->add_option("--report", report_path, "Write the JSON solve report here");
  add_solver_flags(avg);

  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic contaminated scene");
  add_scenario_flags(synth);
  synth->add_option("--out", out_prefix, "Output file prefix")->required();

  auto* sweep = app.add_subcommand(
      "sweep", "Run the alpha sensitivity sweep on one synthetic scene");
  add_scenario_flags(sweep);
  sweep->add_option("--alphas", alphas, "Comma-separated alpha values")
      ->delimiter(',')
      ->default_val(std::vector<double>{1.0});
  sweep->add_option("--out", out_path, "Table file (default: stdout)");
  add_solver_flags(sweep);

  auto* eval = app.add_subcommand(
      "eval", "Compare estimated against ground-truth global motions");
  std::string est_path, gt_path;
  eval->add_option("estimate", est_path, "Estimated globals file")->required();
  eval->add_option("ground_truth", gt_path, "Ground-truth globals file")
      ->required();
  eval->add_option("--format", fmt, "Format override for both files")
      ->check(CLI::IsMember({"g2o", "json"}));

  CLI11_PARSE(app, argc, argv);

  if (method == "plain") cfg.mode = motavg::SolverMode::plain;
  else if (method == "fixed") cfg.mode = motavg::SolverMode::fixed_weights;
  else cfg.mode = motavg::SolverMode::mcc;

  try {
    if (avg->parsed()) {
      return cmd_average(input, init_path, fmt, init_fmt, cfg, out_path,
                         out_fmt, report_path);
    }
    if (synth->parsed()) return cmd_synth(spec, out_prefix);
    if (sweep->parsed()) return cmd_sweep(spec, alphas, cfg, out_path);
    if (eval->parsed()) return cmd_eval(est_path, gt_path, fmt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
