#include "gscalei/dag.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gscalei/errors.hpp"

namespace gscalei {

Dag::Dag(int n_nodes, std::vector<std::vector<int>> parent_sets,
         std::vector<int> topological_order)
    : n(n_nodes), parents(std::move(parent_sets)), topo_order(std::move(topological_order)) {
  if (n < 0) throw InvalidGraph("node count must be nonnegative");
  if (static_cast<int>(parents.size()) != n || static_cast<int>(topo_order.size()) != n)
    throw InvalidGraph("parents/topo_order size must equal node count");

  std::vector<int> position(n, -1);
  for (int rank = 0; rank < n; ++rank) {
    const int node = topo_order[rank];
    if (node < 0 || node >= n || position[node] != -1)
      throw InvalidGraph("topo_order is not a permutation of [n]");
    position[node] = rank;
  }
  for (int node = 0; node < n; ++node) {
    auto& pa = parents[node];
    std::sort(pa.begin(), pa.end());
    for (int p : pa) {
      if (p < 0 || p >= n) throw InvalidGraph("parent index out of range");
      if (p == node)
        throw InvalidGraph("node " + std::to_string(node) + " lists itself as parent");
      if (position[p] >= position[node])
        throw InvalidGraph("parent " + std::to_string(p) + " does not precede node " +
                           std::to_string(node) + " in topo_order");
    }
    if (std::adjacent_find(pa.begin(), pa.end()) != pa.end())
      throw InvalidGraph("duplicate parent entry");
  }
}

std::vector<std::vector<int>> Dag::children() const {
  std::vector<std::vector<int>> ch(n);
  for (int node = 0; node < n; ++node)
    for (int p : parents[node]) ch[p].push_back(node);
  return ch;
}

bool Dag::has_edge(int from, int to) const {
  const auto& pa = parents[to];
  return std::binary_search(pa.begin(), pa.end(), from);
}

int Dag::edge_count() const {
  int count = 0;
  for (const auto& pa : parents) count += static_cast<int>(pa.size());
  return count;
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int node = 0; node < n; ++node)
    for (int p : parents[node]) out.emplace_back(p, node);
  return out;
}

Dag sample_er_dag(int n, double density, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_er_dag: n must be >= 1");
  if (density < 0.0 || density > 1.0)
    throw std::invalid_argument("sample_er_dag: density must be in [0, 1]");
  std::vector<std::vector<int>> parents(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < density) parents[j].push_back(i);
  std::vector<int> topo(n);
  for (int i = 0; i < n; ++i) topo[i] = i;
  return Dag(n, std::move(parents), std::move(topo));
}

}  // namespace gscalei
