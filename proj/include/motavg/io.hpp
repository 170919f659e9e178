// File ingestion and serialization: a g2o subset (VERTEX_SE3:QUAT /
// EDGE_SE3:QUAT) and a self-describing JSON schema, plus the Hamilton
// quaternion <-> rotation matrix conversions used at the format boundary.
//
// Edge semantics in both formats: the stored measurement satisfies
// M_ij = M_i^-1 * M_j. View ids are remapped to a dense 0..N-1 range in
// order of first appearance.

#ifndef MOTAVG_IO_HPP
#define MOTAVG_IO_HPP

#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motavg/errors.hpp"
#include "motavg/graph.hpp"
#include "motavg/se3.hpp"
#include "motavg/solver.hpp"

namespace motavg {

using Vec4 = Eigen::Vector4d;

/// Hamilton-convention quaternion (qx, qy, qz, qw) to rotation matrix.
/// Rejects quaternions whose norm deviates from 1 by more than 1e-3, then
/// normalizes the survivors.
inline Mat3 quaternion_to_rotation(const Vec4& q) {
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ParseError("quaternion norm " + std::to_string(norm) +
                     " deviates from 1 beyond tolerance 1e-3");
  }
  const Vec4 u = q / norm;
  const double x = u(0), y = u(1), z = u(2), w = u(3);
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

/// Rotation matrix to quaternion, sign-canonicalized: qw >= 0, and when
/// qw = 0 the first nonzero component is positive.
inline Vec4 rotation_to_quaternion(const Mat3& r) {
  Eigen::Quaterniond q(r);
  Vec4 out(q.x(), q.y(), q.z(), q.w());
  double lead = out(3);
  for (int k = 0; lead == 0.0 && k < 3; ++k) lead = out(k);
  if (lead < 0.0) out = -out;
  return out;
}

struct ParsedGraph {
  MotionGraph graph;
  std::optional<GlobalMotionSet> globals;
  std::vector<std::string> warnings;  // skipped records etc.
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected number, got '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": trailing characters in number '" + tok + "'");
  }
  return v;
}

}  // namespace detail

/// Parses the g2o subset. Unknown record tags are skipped with a warning;
/// malformed records throw ParseError with the line number. When VERTEX
/// records are present they must cover every view mentioned.
inline ParsedGraph parse_g2o(std::istream& in) {
  std::map<long long, std::size_t> id_map;  // file id -> dense index
  auto dense_id = [&](long long raw) {
    auto [it, inserted] = id_map.insert({raw, id_map.size()});
    return it->second;
  };

  std::vector<std::pair<std::size_t, Motion>> vertices;
  std::vector<RelativeMotionEdge> edges;
  ParsedGraph out;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;  // blank line

    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);

    if (tag == "VERTEX_SE3:QUAT") {
      if (toks.size() != 8) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": VERTEX_SE3:QUAT expects 8 fields, got " +
                         std::to_string(toks.size()));
      }
      long long raw_id = 0;
      try {
        raw_id = std::stoll(toks[0]);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad vertex id '" + toks[0] + "'");
      }
      Motion m;
      m.t = Vec3(detail::parse_double(toks[1], line_no),
                 detail::parse_double(toks[2], line_no),
                 detail::parse_double(toks[3], line_no));
      Vec4 q(detail::parse_double(toks[4], line_no),
             detail::parse_double(toks[5], line_no),
             detail::parse_double(toks[6], line_no),
             detail::parse_double(toks[7], line_no));
      try {
        m.r = quaternion_to_rotation(q);
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      vertices.push_back({dense_id(raw_id), m});
    } else if (tag == "EDGE_SE3:QUAT") {
      // 2 ids + 7 pose numbers, optionally followed by the 21 upper-triangle
      // information-matrix entries (parsed and discarded).
      if (toks.size() != 9 && toks.size() != 30) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": EDGE_SE3:QUAT expects 9 or 30 fields, got " +
                         std::to_string(toks.size()));
      }
      long long raw_i = 0, raw_j = 0;
      try {
        raw_i = std::stoll(toks[0]);
        raw_j = std::stoll(toks[1]);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad edge view id");
      }
      RelativeMotionEdge e;
      e.i = dense_id(raw_i);
      e.j = dense_id(raw_j);
      e.measurement.t = Vec3(detail::parse_double(toks[2], line_no),
                             detail::parse_double(toks[3], line_no),
                             detail::parse_double(toks[4], line_no));
      Vec4 q(detail::parse_double(toks[5], line_no),
             detail::parse_double(toks[6], line_no),
             detail::parse_double(toks[7], line_no),
             detail::parse_double(toks[8], line_no));
      try {
        e.measurement.r = quaternion_to_rotation(q);
      } catch (const ParseError& err) {
        throw ParseError("line " + std::to_string(line_no) + ": " +
                         err.what());
      }
      for (std::size_t k = 9; k < toks.size(); ++k) {
        detail::parse_double(toks[k], line_no);  // validated, discarded
      }
      edges.push_back(std::move(e));
    } else {
      out.warnings.push_back("line " + std::to_string(line_no) +
                             ": skipped unsupported record '" + tag + "'");
    }
  }

  const std::size_t n_views = id_map.size();
  out.graph = build_graph(n_views, std::move(edges));
  if (!vertices.empty()) {
    if (vertices.size() != n_views) {
      throw ParseError("vertex records cover " +
                       std::to_string(vertices.size()) + " of " +
                       std::to_string(n_views) + " views");
    }
    GlobalMotionSet globals = GlobalMotionSet::identities(n_views);
    for (const auto& [idx, m] : vertices) globals.motions[idx] = m;
    out.globals = std::move(globals);
  }
  return out;
}

inline ParsedGraph parse_g2o(const std::string& text) {
  std::istringstream in(text);
  return parse_g2o(in);
}

inline void write_g2o(std::ostream& out, const MotionGraph& g,
                      const GlobalMotionSet* globals = nullptr) {
  using detail::format_double;
  auto pose_fields = [](const Motion& m) {
    const Vec4 q = rotation_to_quaternion(m.r);
    std::string s;
    for (int k = 0; k < 3; ++k) s += " " + detail::format_double(m.t(k));
    for (int k = 0; k < 4; ++k) s += " " + detail::format_double(q(k));
    return s;
  };
  if (globals) {
    for (std::size_t i = 0; i < globals->size(); ++i) {
      out << "VERTEX_SE3:QUAT " << i << pose_fields(globals->motions[i])
          << "\n";
    }
  }
  for (const auto& e : g.edges) {
    out << "EDGE_SE3:QUAT " << e.i << " " << e.j
        << pose_fields(e.measurement) << "\n";
  }
}

inline std::string write_g2o(const MotionGraph& g,
                             const GlobalMotionSet* globals = nullptr) {
  std::ostringstream out;
  write_g2o(out, g, globals);
  return out.str();
}

// --- JSON schema -----------------------------------------------------------
//
// {
//   "n_views": N,
//   "edges": [{"i":., "j":., "r":[9 row-major], "t":[3], "weight":.}, ...],
//   "globals": [{"r":[9], "t":[3]}, ...],               (optional)
//   "report": {"iterations": k, "e_m": [...], "sigma": [...],
//              "final_weights": [...], "termination": "..."}   (optional)
// }

namespace detail {

inline nlohmann::json motion_to_json(const Motion& m) {
  nlohmann::json j;
  auto& r = j["r"] = nlohmann::json::array();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r.push_back(m.r(a, b));
  auto& t = j["t"] = nlohmann::json::array();
  for (int a = 0; a < 3; ++a) t.push_back(m.t(a));
  return j;
}

inline Motion motion_from_json(const nlohmann::json& j,
                               const std::string& path) {
  if (!j.contains("r") || !j["r"].is_array() || j["r"].size() != 9) {
    throw ParseError(path + ".r: expected array of 9 numbers");
  }
  if (!j.contains("t") || !j["t"].is_array() || j["t"].size() != 3) {
    throw ParseError(path + ".t: expected array of 3 numbers");
  }
  Motion m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m.r(a, b) = j["r"][3 * a + b].get<double>();
  for (int a = 0; a < 3; ++a) m.t(a) = j["t"][a].get<double>();
  return m;
}

}  // namespace detail

inline std::string write_json(const MotionGraph& g,
                              const GlobalMotionSet* globals = nullptr,
                              const SolveReport* report = nullptr) {
  nlohmann::json j;
  j["n_views"] = g.n_views;
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    nlohmann::json je = detail::motion_to_json(e.measurement);
    je["i"] = e.i;
    je["j"] = e.j;
    je["weight"] = e.weight;
    edges.push_back(std::move(je));
  }
  if (globals) {
    auto& jg = j["globals"] = nlohmann::json::array();
    for (const auto& m : globals->motions) {
      jg.push_back(detail::motion_to_json(m));
    }
  }
  if (report) {
    nlohmann::json jr;
    jr["iterations"] = report->iterations_run;
    auto& em = jr["e_m"] = nlohmann::json::array();
    auto& sig = jr["sigma"] = nlohmann::json::array();
    for (const auto& it : report->iterations) {
      em.push_back(it.residual_error);
      sig.push_back(it.sigma);
    }
    jr["final_weights"] = report->final_weights;
    jr["termination"] = to_string(report->termination);
    j["report"] = std::move(jr);
  }
  return j.dump(2) + "\n";
}

struct ParsedJson {
  MotionGraph graph;
  std::optional<GlobalMotionSet> globals;
  std::optional<SolveReport> report;
};

inline ParsedJson parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("n_views") || !j["n_views"].is_number_unsigned()) {
    throw ParseError("n_views: missing or not a non-negative integer");
  }
  if (!j.contains("edges") || !j["edges"].is_array()) {
    throw ParseError("edges: missing or not an array");
  }
  ParsedJson out;
  const std::size_t n_views = j["n_views"].get<std::size_t>();
  std::vector<RelativeMotionEdge> edges;
  for (std::size_t k = 0; k < j["edges"].size(); ++k) {
    const auto& je = j["edges"][k];
    const std::string path = "edges[" + std::to_string(k) + "]";
    if (!je.contains("i") || !je["i"].is_number_unsigned() ||
        !je.contains("j") || !je["j"].is_number_unsigned()) {
      throw ParseError(path + ": i and j must be non-negative integers");
    }
    RelativeMotionEdge e;
    e.i = je["i"].get<std::size_t>();
    e.j = je["j"].get<std::size_t>();
    e.measurement = detail::motion_from_json(je, path);
    if (je.contains("weight")) e.weight = je["weight"].get<double>();
    edges.push_back(std::move(e));
  }
  out.graph = build_graph(n_views, std::move(edges));
  if (j.contains("globals")) {
    if (!j["globals"].is_array()) throw ParseError("globals: not an array");
    GlobalMotionSet globals;
    for (std::size_t k = 0; k < j["globals"].size(); ++k) {
      globals.motions.push_back(detail::motion_from_json(
          j["globals"][k], "globals[" + std::to_string(k) + "]"));
    }
    out.globals = std::move(globals);
  }
  if (j.contains("report")) {
    const auto& jr = j["report"];
    if (!jr.is_object()) throw ParseError("report: not an object");
    SolveReport report;
    report.iterations_run = jr.value("iterations", std::size_t{0});
    const auto em = jr.value("e_m", std::vector<double>{});
    const auto sig = jr.value("sigma", std::vector<double>{});
    if (em.size() != sig.size()) {
      throw ParseError("report: e_m and sigma lengths differ");
    }
    for (std::size_t k = 0; k < em.size(); ++k) {
      IterationRecord rec;
      rec.residual_error = em[k];
      rec.sigma = sig[k];
      report.iterations.push_back(rec);
    }
    report.final_weights = jr.value("final_weights", std::vector<double>{});
    const std::string term = jr.value("termination", "iteration_cap");
    if (term == "converged") {
      report.termination = Termination::converged;
    } else if (term == "aborted_nonfinite") {
      report.termination = Termination::aborted_nonfinite;
    } else {
      report.termination = Termination::iteration_cap;
    }
    out.report = std::move(report);
  }
  return out;
}

}  // namespace motavg

#endif  // MOTAVG_IO_HPP
