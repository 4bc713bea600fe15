#include "seot/graph.hpp"

#include "seot/error.hpp"
#include "seot/format.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace seot {

std::string NodeRange::name() const {
  switch (kind) {
    case DomainKind::Barycenter: return "barycenter";
    case DomainKind::Source: return "source_" + std::to_string(index);
    case DomainKind::Target: return "target";
  }
  return "unknown";
}

CrossDomainGraph::CrossDomainGraph(std::size_t k, std::vector<NodeRange> ranges, std::vector<Edge> edges)
    : ranges_(std::move(ranges)) {
  std::size_t next = 0;
  for (const auto& r : ranges_) {
    if (r.start != next) throw Error(ErrorKind::InvalidInput, "node ranges must be contiguous and ordered");
    next = r.end();
  }
  if (!ranges_.empty() && next != k)
    throw Error(ErrorKind::InvalidInput, "node ranges do not cover all nodes");

  adjacency_.rows = adjacency_.cols = k;
  adjacency_.row_ptr.assign(k + 1, 0);
  for (const auto& e : edges) {
    if (e.i >= k || e.j >= k || e.i == e.j || !(e.w > 0.0))
      throw Error(ErrorKind::InvalidInput, "invalid edge (" + std::to_string(e.i) + ", " +
                                               std::to_string(e.j) + ")");
    ++adjacency_.row_ptr[e.i + 1];
    ++adjacency_.row_ptr[e.j + 1];
  }
  std::partial_sum(adjacency_.row_ptr.begin(), adjacency_.row_ptr.end(), adjacency_.row_ptr.begin());
  adjacency_.col_idx.resize(adjacency_.row_ptr.back());
  adjacency_.values.resize(adjacency_.row_ptr.back());
  std::vector<std::size_t> fill(adjacency_.row_ptr.begin(), adjacency_.row_ptr.end() - 1);
  for (const auto& e : edges) {
    adjacency_.col_idx[fill[e.i]] = static_cast<std::uint32_t>(e.j);
    adjacency_.values[fill[e.i]++] = e.w;
    adjacency_.col_idx[fill[e.j]] = static_cast<std::uint32_t>(e.i);
    adjacency_.values[fill[e.j]++] = e.w;
  }
  // Canonical column order within each row.
  std::vector<std::pair<std::uint32_t, double>> buf;
  for (std::size_t r = 0; r < k; ++r) {
    const auto lo = adjacency_.row_ptr[r], hi = adjacency_.row_ptr[r + 1];
    buf.clear();
    for (auto q = lo; q < hi; ++q) buf.emplace_back(adjacency_.col_idx[q], adjacency_.values[q]);
    std::sort(buf.begin(), buf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t q = 1; q < buf.size(); ++q)
      if (buf[q].first == buf[q - 1].first)
        throw Error(ErrorKind::InvalidInput, "duplicate edge at node " + std::to_string(r));
    for (auto q = lo; q < hi; ++q) {
      adjacency_.col_idx[q] = buf[q - lo].first;
      adjacency_.values[q] = buf[q - lo].second;
    }
  }
}

const NodeRange& CrossDomainGraph::range(DomainKind kind, int index) const {
  for (const auto& r : ranges_)
    if (r.kind == kind && (kind != DomainKind::Source || r.index == index)) return r;
  throw Error(ErrorKind::InvalidInput, "graph has no such node range");
}

double CrossDomainGraph::weight(std::size_t i, std::size_t j) const {
  const auto lo = adjacency_.col_idx.begin() + static_cast<std::ptrdiff_t>(adjacency_.row_ptr[i]);
  const auto hi = adjacency_.col_idx.begin() + static_cast<std::ptrdiff_t>(adjacency_.row_ptr[i + 1]);
  const auto it = std::lower_bound(lo, hi, static_cast<std::uint32_t>(j));
  if (it == hi || *it != j) return 0.0;
  return adjacency_.values[static_cast<std::size_t>(it - adjacency_.col_idx.begin())];
}

Vector CrossDomainGraph::degrees() const {
  Vector d = Vector::Zero(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < size(); ++r)
    for (auto q = adjacency_.row_ptr[r]; q < adjacency_.row_ptr[r + 1]; ++q)
      d[static_cast<Eigen::Index>(r)] += adjacency_.values[q];
  return d;
}

std::vector<std::size_t> CrossDomainGraph::isolated_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < size(); ++r)
    if (adjacency_.row_ptr[r] == adjacency_.row_ptr[r + 1]) out.push_back(r);
  return out;
}

std::vector<Edge> CrossDomainGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < size(); ++r)
    for (auto q = adjacency_.row_ptr[r]; q < adjacency_.row_ptr[r + 1]; ++q)
      if (adjacency_.col_idx[q] > r) out.push_back({r, adjacency_.col_idx[q], adjacency_.values[q]});
  return out;
}

namespace {

void append_plan_edges(const RowMatrix& gamma, std::size_t row_offset, std::size_t col_offset,
                       double prune_threshold, std::vector<Edge>& edges) {
  if (gamma.size() == 0) return;
  const double cutoff = prune_threshold * gamma.maxCoeff();
  for (Eigen::Index i = 0; i < gamma.rows(); ++i)
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double w = gamma(i, j);
      if (w > cutoff && w > 0.0)
        edges.push_back({row_offset + static_cast<std::size_t>(i), col_offset + static_cast<std::size_t>(j), w});
    }
}

}  // namespace

CrossDomainGraph bipartite_graph(const TransportPlan& plan, double prune_threshold) {
  if (plan.empty()) throw Error(ErrorKind::InvalidInput, "bipartite_graph: empty plan");
  const std::size_t ns = plan.rows(), nt = plan.cols();
  std::vector<Edge> edges;
  append_plan_edges(plan.gamma, 0, ns, prune_threshold, edges);
  if (edges.empty()) throw Error(ErrorKind::DegenerateGraph, "plan has no entries left after pruning");
  std::vector<NodeRange> ranges{{DomainKind::Source, 0, 0, ns}, {DomainKind::Target, 0, ns, nt}};
  return CrossDomainGraph(ns + nt, std::move(ranges), std::move(edges));
}

CrossDomainGraph star_graph(const Barycenter& bary, std::size_t n_sources, std::size_t n_target,
                            double prune_threshold) {
  if (!bary.has_target())
    throw Error(ErrorKind::InvalidState, "star_graph: barycenter has no plan to the target");
  if (bary.plans_to_sources.size() != n_sources)
    throw Error(ErrorKind::InvalidState, "star_graph: expected " + std::to_string(n_sources) +
                                             " source plans, barycenter has " +
                                             std::to_string(bary.plans_to_sources.size()));
  if (bary.plan_to_target.cols() != n_target)
    throw Error(ErrorKind::ShapeError, "star_graph: target plan width does not match n_target");

  const std::size_t nb = bary.n_atoms();
  std::vector<NodeRange> ranges{{DomainKind::Barycenter, 0, 0, nb}};
  std::vector<Edge> edges;
  std::size_t offset = nb;
  for (std::size_t i = 0; i < n_sources; ++i) {
    const auto& plan = bary.plans_to_sources[i];
    if (plan.rows() != nb) throw Error(ErrorKind::ShapeError, "source plan rows differ from n_atoms");
    ranges.push_back({DomainKind::Source, static_cast<int>(i), offset, plan.cols()});
    append_plan_edges(plan.gamma, 0, offset, prune_threshold, edges);
    offset += plan.cols();
  }
  if (bary.plan_to_target.rows() != nb) throw Error(ErrorKind::ShapeError, "target plan rows differ from n_atoms");
  ranges.push_back({DomainKind::Target, 0, offset, n_target});
  append_plan_edges(bary.plan_to_target.gamma, 0, offset, prune_threshold, edges);
  offset += n_target;
  return CrossDomainGraph(offset, std::move(ranges), std::move(edges));
}

std::vector<std::size_t> component_labels(const CrossDomainGraph& graph) {
  const std::size_t k = graph.size();
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const auto& a = graph.adjacency();
  for (std::size_t r = 0; r < k; ++r)
    for (auto q = a.row_ptr[r]; q < a.row_ptr[r + 1]; ++q) {
      const auto ra = find(r), rb = find(a.col_idx[q]);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  std::vector<std::size_t> label(k), remap(k, k);
  std::size_t next = 0;
  for (std::size_t r = 0; r < k; ++r) {
    const auto root = find(r);
    if (remap[root] == k) remap[root] = next++;
    label[r] = remap[root];
  }
  return label;
}

std::size_t components(const CrossDomainGraph& graph) {
  const auto labels = component_labels(graph);
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void write_edge_list(const CrossDomainGraph& graph, std::ostream& out) {
  out << "# K=" << graph.size() << " nnz=" << graph.nnz() << '\n';
  for (const auto& e : graph.edges()) out << e.i << '\t' << e.j << '\t' << format_double(e.w) << '\n';
}

}  // namespace seot
