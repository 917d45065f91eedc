#pragma once

#include <cstddef>
#include <vector>

namespace parastitch {

// s-t max-flow / min-cut on a small directed graph (Dinic's algorithm) with
// nonnegative real capacities. Terminal capacities are given per node.
class MaxFlowGraph {
 public:
  explicit MaxFlowGraph(std::size_t nodes);

  std::size_t node_count() const { return nodes_; }

  // Cost paid when node ends on the sink side (cap_source) or on the source
  // side (cap_sink). Calls accumulate.
  void add_terminal(std::size_t node, double cap_source, double cap_sink);
  // Directed edge u -> v cut when u is on the source side and v on the sink
  // side; optional reverse capacity.
  void add_edge(std::size_t u, std::size_t v, double cap, double rev_cap = 0.0);

  double solve();
  // Valid after solve(): true when the node is on the sink side of the cut.
  bool on_sink_side(std::size_t node) const { return sink_side_[node]; }

 private:
  struct Arc {
    std::size_t to;
    std::size_t rev;
    double cap;
  };

  void push_arc(std::size_t u, std::size_t v, double cap, double rev_cap);
  bool bfs();
  double dfs(std::size_t u, double pushed);

  std::size_t nodes_;
  std::size_t source_;
  std::size_t sink_;
  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
  std::vector<bool> sink_side_;
};

}  // namespace parastitch
