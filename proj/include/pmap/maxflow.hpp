#pragma once
// Exact max-flow / min-cut on directed networks with real capacities.
// Dinic's algorithm: the phase bound O(V^2 E) does not depend on capacity
// magnitudes, so floating-point capacities terminate without scaling tricks.

#include <vector>

namespace pmap {

struct FlowNetwork {
  int num_nodes = 0;
  int source = 0;
  int sink = 0;

  struct Arc {
    int from = 0, to = 0;
    double capacity = 0.0;  // nonnegative, finite
  };
  std::vector<Arc> arcs;

  void add_arc(int from, int to, double capacity);
  void validate() const;  // throws std::invalid_argument
};

struct MaxFlowResult {
  double flow = 0.0;
  // source_side[v] is true when v is reachable from the source in the final
  // residual graph; the arcs crossing out of this set form a minimum cut.
  std::vector<bool> source_side;
  int phases = 0;

  // Total original capacity of arcs from the source side to the sink side.
  double cut_capacity(const FlowNetwork& net) const;
};

MaxFlowResult max_flow(const FlowNetwork& net);

}  // namespace pmap
