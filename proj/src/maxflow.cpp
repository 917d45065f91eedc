#include "parastitch/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "parastitch/error.hpp"

namespace parastitch {
namespace {
constexpr double kFlowEps = 1e-12;
}

MaxFlowGraph::MaxFlowGraph(std::size_t nodes)
    : nodes_(nodes),
      source_(nodes),
      sink_(nodes + 1),
      adj_(nodes + 2),
      sink_side_(nodes, false) {}

void MaxFlowGraph::push_arc(std::size_t u, std::size_t v, double cap,
                            double rev_cap) {
  adj_[u].push_back({v, adj_[v].size(), cap});
  adj_[v].push_back({u, adj_[u].size() - 1, rev_cap});
}

void MaxFlowGraph::add_terminal(std::size_t node, double cap_source,
                                double cap_sink) {
  require(cap_source >= 0.0 && cap_sink >= 0.0,
          ErrorCode::kPreconditionViolation, "negative terminal capacity");
  if (cap_source > 0.0) push_arc(source_, node, cap_source, 0.0);
  if (cap_sink > 0.0) push_arc(node, sink_, cap_sink, 0.0);
}

void MaxFlowGraph::add_edge(std::size_t u, std::size_t v, double cap,
                            double rev_cap) {
  require(cap >= 0.0 && rev_cap >= 0.0, ErrorCode::kPreconditionViolation,
          "negative edge capacity");
  if (cap > 0.0 || rev_cap > 0.0) push_arc(u, v, cap, rev_cap);
}

bool MaxFlowGraph::bfs() {
  level_.assign(adj_.size(), -1);
  std::queue<std::size_t> q;
  level_[source_] = 0;
  q.push(source_);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const auto& a : adj_[u]) {
      if (a.cap > kFlowEps && level_[a.to] < 0) {
        level_[a.to] = level_[u] + 1;
        q.push(a.to);
      }
    }
  }
  return level_[sink_] >= 0;
}

double MaxFlowGraph::dfs(std::size_t u, double pushed) {
  if (u == sink_) return pushed;
  for (std::size_t& i = iter_[u]; i < adj_[u].size(); ++i) {
    Arc& a = adj_[u][i];
    if (a.cap <= kFlowEps || level_[a.to] != level_[u] + 1) continue;
    const double got = dfs(a.to, std::min(pushed, a.cap));
    if (got > 0.0) {
      a.cap -= got;
      adj_[a.to][a.rev].cap += got;
      return got;
    }
  }
  return 0.0;
}

double MaxFlowGraph::solve() {
  double flow = 0.0;
  while (bfs()) {
    iter_.assign(adj_.size(), 0);
    while (true) {
      const double f = dfs(source_, std::numeric_limits<double>::infinity());
      if (f <= 0.0) break;
      flow += f;
    }
  }
  // Nodes unreachable from the source in the residual graph form the sink
  // side.
  for (std::size_t v = 0; v < nodes_; ++v) sink_side_[v] = level_[v] < 0;
  return flow;
}

}  // namespace parastitch
