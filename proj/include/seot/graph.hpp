#pragma once

#include "seot/barycenter.hpp"
#include "seot/kernels.hpp"
#include "seot/ot.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace seot {

enum class DomainKind { Barycenter, Source, Target };

struct NodeRange {
  DomainKind kind;
  int index = 0;  // source number for DomainKind::Source, 0 otherwise
  std::size_t start = 0;
  std::size_t len = 0;

  std::size_t end() const { return start + len; }
  std::string name() const;
};

struct Edge {
  std::size_t i;
  std::size_t j;
  double w;
};

/// Symmetric nonnegative cross-domain adjacency over K nodes laid out as
/// contiguous per-domain ranges. Both triangles are materialized in CSR form
/// with identical values, so row-parallel matvecs need no scatter.
class CrossDomainGraph {
 public:
  /// Edges must satisfy i != j and w > 0; each undirected edge is listed once.
  CrossDomainGraph(std::size_t k, std::vector<NodeRange> ranges, std::vector<Edge> edges);

  std::size_t size() const { return adjacency_.rows; }
  /// Number of undirected edges (upper-triangle entries).
  std::size_t nnz() const { return adjacency_.nnz() / 2; }
  const CsrMatrix& adjacency() const { return adjacency_; }
  const std::vector<NodeRange>& node_ranges() const { return ranges_; }
  const NodeRange& range(DomainKind kind, int index = 0) const;

  double weight(std::size_t i, std::size_t j) const;
  Vector degrees() const;
  std::vector<std::size_t> isolated_nodes() const;
  std::vector<Edge> edges() const;  // i < j, row-major order

 private:
  CsrMatrix adjacency_;
  std::vector<NodeRange> ranges_;
};

/// Graph with blocks [[0, gamma], [gamma^T, 0]]. Entries at or below
/// prune_threshold * max(gamma) are dropped; an empty result throws
/// DegenerateGraph.
CrossDomainGraph bipartite_graph(const TransportPlan& plan, double prune_threshold = 1e-9);

/// Star layout: barycenter atoms first, then each source, then the target.
/// Every edge joins a barycenter atom to a sample of one domain. Pruning is
/// relative to each plan's largest entry.
CrossDomainGraph star_graph(const Barycenter& bary, std::size_t n_sources, std::size_t n_target,
                            double prune_threshold = 1e-9);

/// Connected components by union-find; isolated nodes count as components.
std::size_t components(const CrossDomainGraph& graph);

/// Per-node component id in [0, components).
std::vector<std::size_t> component_labels(const CrossDomainGraph& graph);

/// Edge list text: header `# K=<K> nnz=<edges>`, then `i<TAB>j<TAB>w` with i < j.
void write_edge_list(const CrossDomainGraph& graph, std::ostream& out);

}  // namespace seot
