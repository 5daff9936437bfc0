#include "pmap/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pmap {

void FlowNetwork::add_arc(int from, int to, double capacity) {
  arcs.push_back(Arc{from, to, capacity});
}

void FlowNetwork::validate() const {
  if (num_nodes < 2) throw std::invalid_argument("network needs >= 2 nodes");
  if (source == sink) throw std::invalid_argument("source equals sink");
  auto node_ok = [&](int v) { return v >= 0 && v < num_nodes; };
  if (!node_ok(source) || !node_ok(sink)) {
    throw std::invalid_argument("source/sink out of range");
  }
  for (const Arc& a : arcs) {
    if (!node_ok(a.from) || !node_ok(a.to)) {
      throw std::invalid_argument("arc endpoint out of range");
    }
    if (!(a.capacity >= 0.0) || !std::isfinite(a.capacity)) {
      throw std::invalid_argument("arc capacity must be finite and >= 0");
    }
  }
}

namespace {

struct ResidualArc {
  int to;
  int rev;  // index of the reverse arc in adj[to]
  double cap;
};

class Dinic {
 public:
  explicit Dinic(const FlowNetwork& net) : n_(net.num_nodes), adj_(net.num_nodes) {
    for (const FlowNetwork::Arc& a : net.arcs) {
      adj_[a.from].push_back({a.to, static_cast<int>(adj_[a.to].size()), a.capacity});
      adj_[a.to].push_back({a.from, static_cast<int>(adj_[a.from].size()) - 1, 0.0});
    }
  }

  MaxFlowResult run(int s, int t) {
    MaxFlowResult res;
    while (bfs(s, t)) {
      ++res.phases;
      iter_.assign(n_, 0);
      while (true) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= 0.0) break;
        res.flow += pushed;
      }
    }
    // Final BFS state marks the source side of a minimum cut.
    res.source_side.assign(n_, false);
    for (int v = 0; v < n_; ++v) res.source_side[v] = level_[v] >= 0;
    return res;
  }

 private:
  bool bfs(int s, int t) {
    level_.assign(n_, -1);
    queue_.clear();
    queue_.push_back(s);
    level_[s] = 0;
    for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
      const int v = queue_[qi];
      for (const ResidualArc& a : adj_[v]) {
        if (a.cap > 0.0 && level_[a.to] < 0) {
          level_[a.to] = level_[v] + 1;
          queue_.push_back(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int v, int t, double limit) {
    if (v == t) return limit;
    for (int& i = iter_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
      ResidualArc& a = adj_[v][i];
      if (a.cap <= 0.0 || level_[a.to] != level_[v] + 1) continue;
      const double pushed = dfs(a.to, t, std::min(limit, a.cap));
      if (pushed > 0.0) {
        a.cap -= pushed;
        adj_[a.to][a.rev].cap += pushed;
        return pushed;
      }
    }
    level_[v] = -1;  // dead end in this phase
    return 0.0;
  }

  int n_;
  std::vector<std::vector<ResidualArc>> adj_;
  std::vector<int> level_;
  std::vector<int> iter_;
  std::vector<int> queue_;
};

}  // namespace

double MaxFlowResult::cut_capacity(const FlowNetwork& net) const {
  double cap = 0.0;
  for (const FlowNetwork::Arc& a : net.arcs) {
    if (source_side[a.from] && !source_side[a.to]) cap += a.capacity;
  }
  return cap;
}

MaxFlowResult max_flow(const FlowNetwork& net) {
  net.validate();
  Dinic d(net);
  return d.run(net.source, net.sink);
}

}  // namespace pmap
