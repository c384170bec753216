#ifndef GSCALEI_DAG_HPP_
#define GSCALEI_DAG_HPP_

#include <vector>

#include "gscalei/rng.hpp"

namespace gscalei {

/// Directed acyclic graph over nodes 0..n-1 with explicit parent sets and a
/// topological order. Construction validates acyclicity (every parent must
/// precede its child in topo_order) and rejects self-loops.
struct Dag {
  int n = 0;
  std::vector<std::vector<int>> parents;  // sorted ascending per node
  std::vector<int> topo_order;            // permutation of 0..n-1

  Dag() = default;
  Dag(int n_nodes, std::vector<std::vector<int>> parent_sets,
      std::vector<int> topological_order);

  /// Child lists derived from the parent sets, sorted ascending.
  std::vector<std::vector<int>> children() const;

  bool has_edge(int from, int to) const;
  int edge_count() const;
  /// Edge list (from, to), ordered by (to, from).
  std::vector<std::pair<int, int>> edges() const;

  bool is_root(int node) const { return parents[node].empty(); }
};

/// Erdos-Renyi DAG: every pair (i, j) with i < j receives edge i -> j
/// independently with probability `density` (pairs visited in lexicographic
/// order, one uniform draw each). Topological order is the identity.
Dag sample_er_dag(int n, double density, Rng& rng);

}  // namespace gscalei

#endif  // GSCALEI_DAG_HPP_
