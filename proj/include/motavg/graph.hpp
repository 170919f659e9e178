// View-graph data model: relative motion edges, the motion graph, global
// motion sets, spanning-tree initialization, and the residual motion error.
//
// Edge convention: the stored measurement satisfies M_ij = M_i^-1 * M_j.

#ifndef MOTAVG_GRAPH_HPP
#define MOTAVG_GRAPH_HPP

#include <cstddef>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "motavg/errors.hpp"
#include "motavg/se3.hpp"

namespace motavg {

/// One measured relative motion between views i and j.
struct RelativeMotionEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  Motion measurement;
  double weight = 1.0;  // in (0, 1]
};

/// N views plus H relative-motion edges.
struct MotionGraph {
  std::size_t n_views = 0;
  std::vector<RelativeMotionEdge> edges;

  std::size_t n_edges() const { return edges.size(); }
};

/// The N global motions; index 0 is the gauge reference.
struct GlobalMotionSet {
  std::vector<Motion> motions;

  std::size_t size() const { return motions.size(); }

  static GlobalMotionSet identities(std::size_t n) {
    GlobalMotionSet out;
    out.motions.assign(n, Motion::identity());
    return out;
  }
};

/// Validates and assembles a MotionGraph. Throws GraphError naming the
/// offending edge on self-loops, out-of-range indices, duplicate (i,j)
/// pairs, or invalid measurements.
inline MotionGraph build_graph(std::size_t n_views,
                               std::vector<RelativeMotionEdge> edges) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t h = 0; h < edges.size(); ++h) {
    const auto& e = edges[h];
    if (e.i == e.j) {
      throw GraphError("edge " + std::to_string(h) + ": self-loop at view " +
                       std::to_string(e.i));
    }
    if (e.i >= n_views || e.j >= n_views) {
      throw GraphError("edge " + std::to_string(h) + ": view index (" +
                       std::to_string(e.i) + "," + std::to_string(e.j) +
                       ") out of range for " + std::to_string(n_views) +
                       " views");
    }
    if (!seen.insert({e.i, e.j}).second) {
      throw GraphError("edge " + std::to_string(h) + ": duplicate pair (" +
                       std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    }
    if (auto v = validate_motion(e.measurement); !v.ok) {
      throw GraphError("edge " + std::to_string(h) +
                       ": invalid measurement: " + v.failure);
    }
    if (!(e.weight > 0.0 && e.weight <= 1.0)) {
      throw GraphError("edge " + std::to_string(h) + ": weight " +
                       std::to_string(e.weight) + " outside (0,1]");
    }
  }
  return MotionGraph{n_views, std::move(edges)};
}

namespace detail {

// Connected components over the undirected view graph, as labels 0..c-1.
inline std::vector<int> component_labels(const MotionGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.n_views);
  for (const auto& e : g.edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<int> label(g.n_views, -1);
  int next = 0;
  for (std::size_t s = 0; s < g.n_views; ++s) {
    if (label[s] != -1) continue;
    label[s] = next;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      std::size_t v = q.front();
      q.pop();
      for (std::size_t w : adj[v]) {
        if (label[w] == -1) {
          label[w] = next;
          q.push(w);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace detail

inline bool is_connected(const MotionGraph& g) {
  if (g.n_views <= 1) return true;
  const auto label = detail::component_labels(g);
  for (int l : label) {
    if (l != 0) return false;
  }
  return true;
}

/// Breadth-first chaining from view 0: M_0 = I and M_j = M_i * M_ij along
/// tree edges (reverse edges chain through the inverse measurement).
inline GlobalMotionSet spanning_tree_init(const MotionGraph& g) {
  if (!is_connected(g)) {
    throw DisconnectedError("spanning_tree_init requires a connected graph");
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.n_views);
  for (std::size_t h = 0; h < g.edges.size(); ++h) {
    adj[g.edges[h].i].push_back({g.edges[h].j, h});
    adj[g.edges[h].j].push_back({g.edges[h].i, h});
  }
  GlobalMotionSet out = GlobalMotionSet::identities(g.n_views);
  std::vector<bool> done(g.n_views, false);
  std::queue<std::size_t> q;
  done[0] = true;
  q.push(0);
  while (!q.empty()) {
    std::size_t v = q.front();
    q.pop();
    for (auto [w, h] : adj[v]) {
      if (done[w]) continue;
      const auto& e = g.edges[h];
      if (e.i == v) {
        out.motions[w] = compose(out.motions[v], e.measurement);
      } else {
        out.motions[w] = compose(out.motions[v], inverse(e.measurement));
      }
      done[w] = true;
      q.push(w);
    }
  }
  return out;
}

/// Mean per-edge Frobenius residual of the graph against global motions.
inline double residual_motion_error(const MotionGraph& g,
                                    const GlobalMotionSet& globals) {
  if (g.edges.empty()) {
    throw GraphError("residual_motion_error: graph has no edges");
  }
  double sum = 0.0;
  for (const auto& e : g.edges) {
    sum += frobenius_residual(e.measurement, globals.motions[e.i],
                              globals.motions[e.j]);
  }
  return sum / static_cast<double>(g.edges.size());
}

}  // namespace motavg

#endif  // MOTAVG_GRAPH_HPP
