#include "seot/pipeline.hpp"

#include "seot/error.hpp"

#include <algorithm>
#include <chrono>
#include <string>

namespace seot {
namespace {

using Timings = std::vector<std::pair<std::string, double>>;

template <class F>
auto stage(const char* name, Timings& timings, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto result = fn();
    timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return result;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + name + "': " + e.message());
  }
}

void check_inputs(const std::vector<LabeledDomain>& sources, const LabeledDomain& target) {
  if (sources.empty()) throw Error(ErrorKind::InvalidInput, "at least one labeled source is required");
  for (const auto& s : sources) {
    if (!s.labeled()) throw Error(ErrorKind::InvalidInput, "every source domain must be labeled");
    if (s.dim() != target.dim())
      throw Error(ErrorKind::ShapeError, "source and target feature dimensions differ");
  }
  if (target.size() == 0) throw Error(ErrorKind::InvalidInput, "target domain is empty");
}

int resolve_classes(const SeotConfig& cfg, const std::vector<LabeledDomain>& sources) {
  const int inferred = count_classes(sources);
  const int n = cfg.n_classes > 0 ? cfg.n_classes : inferred;
  if (n < 2) throw Error(ErrorKind::InvalidInput, "at least two classes are required");
  if (inferred > n)
    throw Error(ErrorKind::InvalidInput, "source labels exceed configured n_classes");
  return n;
}

struct SpectralStage {
  LaplacianOperator op;
  EigenResult eig;
  GapSelection gaps;
  std::size_t k = 0, k_min = 0, k_max = 0;
};

SpectralStage spectral_stage(const CrossDomainGraph& graph, const SeotConfig& cfg, int n_classes,
                             Timings& timings) {
  LaplacianOperator op = stage("laplacian", timings, [&] { return laplacian(graph, cfg.isolated_policy); });
  const auto nc = static_cast<std::size_t>(n_classes);
  const std::size_t k_min = cfg.k_mode.k_min > 0 ? cfg.k_mode.k_min : nc;
  const std::size_t k_max = cfg.k_mode.k_max > 0 ? cfg.k_mode.k_max : k_min + 5;
  const std::size_t k_hi = cfg.k_mode.automatic ? k_max : cfg.k_mode.k;
  if (!cfg.k_mode.automatic && cfg.k_mode.k < 1)
    throw Error(ErrorKind::InvalidInput, "fixed embedding dimension must be >= 1");
  const std::size_t needed = cfg.k_mode.automatic ? k_max + 1 : std::max(cfg.k_mode.k, nc + 1);
  if (needed > op.dim() || k_hi >= graph.size())
    throw Error(ErrorKind::InvalidInput, "embedding dimension range exceeds graph size K = " +
                                             std::to_string(graph.size()));
  const std::size_t m = std::min(op.dim(), std::max(needed, k_hi + cfg.gap_margin));

  EigenSolverParams solver = cfg.solver;
  solver.seed = cfg.seed;
  EigenResult eig = stage("eigensolver", timings, [&] { return smallest_eigenpairs(op, m, solver); });

  GapSelection gaps;
  std::size_t k = cfg.k_mode.k;
  const std::size_t sel_min = cfg.k_mode.automatic ? k_min : std::max<std::size_t>(1, std::min(nc, m - 1));
  const std::size_t sel_max = cfg.k_mode.automatic ? k_max : std::min(m - 1, std::max(k_hi, sel_min));
  gaps = select_k(eig.eigenvalues, std::min(nc, sel_min), sel_min, sel_max);
  if (cfg.k_mode.automatic) k = gaps.k;
  return SpectralStage{std::move(op), std::move(eig), std::move(gaps), k, sel_min, sel_max};
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& f, const NodeRange& r) {
  return f.middleRows(static_cast<Eigen::Index>(r.start), static_cast<Eigen::Index>(r.len));
}

void note_plan(SeotDiagnostics& diag, const TransportPlan& plan, const std::string& name) {
  if (!plan.converged) diag.unconverged_plans.push_back(name);
}

}  // namespace

SeotRun run_seot(const std::vector<LabeledDomain>& sources_in, const LabeledDomain& target_in,
                 const SeotConfig& cfg) {
  check_inputs(sources_in, target_in);
  const int n_classes = resolve_classes(cfg, sources_in);
  Timings timings;

  std::vector<LabeledDomain> domains = sources_in;
  domains.push_back(target_in);
  if (cfg.standardize) domains = stage("standardize", timings, [&] { return standardize(domains); });
  const LabeledDomain target = domains.back();
  domains.pop_back();
  const std::vector<LabeledDomain>& sources = domains;

  BarycenterConfig bcfg = cfg.bary;
  bcfg.seed = cfg.seed;
  Barycenter bary = stage("barycenter", timings, [&] { return fit_barycenter(sources, bcfg, cfg.ot, cfg.cost_p); });
  bary = stage("attach_target", timings, [&] { return attach_target(bary, target, cfg.ot, cfg.cost_p); });

  SeotDiagnostics diag;
  for (std::size_t i = 0; i < bary.plans_to_sources.size(); ++i)
    note_plan(diag, bary.plans_to_sources[i], "barycenter->source_" + std::to_string(i));
  note_plan(diag, bary.plan_to_target, "barycenter->target");
  diag.barycenter_converged = bary.converged;
  diag.barycenter_iterations = bary.outer_iterations;
  diag.fallback_labeled_atoms = bary.fallback_labeled_atoms;

  CrossDomainGraph graph = stage("graph", timings, [&] {
    return star_graph(bary, sources.size(), target.size(), cfg.prune_threshold);
  });
  diag.isolated_nodes = graph.isolated_nodes().size();

  SpectralStage spec = spectral_stage(graph, cfg, n_classes, timings);
  diag.eigensolver_restarts = spec.eig.restarts;
  diag.matvecs = spec.eig.matvecs;
  for (double r : spec.eig.residuals) diag.max_eigen_residual = std::max(diag.max_eigen_residual, r);

  SpectralEmbedding emb = stage("embed", timings, [&] { return embed_from(spec.op, spec.eig, spec.k, cfg.row_normalize); });

  EmbeddedDataset data;
  data.train_rows = gather_rows(emb.vectors, graph.range(DomainKind::Barycenter));
  data.train_labels = bary.atom_labels;
  if (cfg.train_on_sources_too) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto rows = gather_rows(emb.vectors, graph.range(DomainKind::Source, static_cast<int>(i)));
      Eigen::MatrixXd stacked(data.train_rows.rows() + rows.rows(), rows.cols());
      stacked << data.train_rows, rows;
      data.train_rows = std::move(stacked);
      data.train_labels.insert(data.train_labels.end(), sources[i].labels->begin(), sources[i].labels->end());
    }
  }
  data.test_rows = gather_rows(emb.vectors, graph.range(DomainKind::Target));

  Labels predictions = stage("classify", timings, [&] { return fit_predict(data, cfg.classifier, cfg.seed, n_classes); });
  std::optional<EvalReport> report;
  if (target.labeled()) report = evaluate(predictions, *target.labels, n_classes);

  return SeotRun{
      .barycenter = std::move(bary),
      .graph = std::move(graph),
      .embedding = std::move(emb),
      .chosen_k = spec.k,
      .gaps = std::move(spec.gaps),
      .k_min = spec.k_min,
      .k_max = spec.k_max,
      .n_classes = n_classes,
      .predictions = std::move(predictions),
      .report = std::move(report),
      .timings = std::move(timings),
      .diagnostics = std::move(diag),
  };
}

SeotRun run_two_domain(const LabeledDomain& source_in, const LabeledDomain& target_in, const SeotConfig& cfg,
                       bool skip_barycenter) {
  if (!skip_barycenter) return run_seot({source_in}, target_in, cfg);
  check_inputs({source_in}, target_in);
  const int n_classes = resolve_classes(cfg, {source_in});
  Timings timings;

  std::vector<LabeledDomain> domains{source_in, target_in};
  if (cfg.standardize) domains = stage("standardize", timings, [&] { return standardize(domains); });
  const LabeledDomain& source = domains[0];
  const LabeledDomain& target = domains[1];

  TransportPlan plan = stage("transport", timings, [&] {
    const CostMatrix c = cost_matrix(source.measure.points(), target.measure.points(), cfg.cost_p);
    return sinkhorn(source.measure, target.measure, c, cfg.ot);
  });
  SeotDiagnostics diag;
  note_plan(diag, plan, "source->target");

  CrossDomainGraph graph = stage("graph", timings, [&] { return bipartite_graph(plan, cfg.prune_threshold); });
  diag.isolated_nodes = graph.isolated_nodes().size();

  SpectralStage spec = spectral_stage(graph, cfg, n_classes, timings);
  diag.eigensolver_restarts = spec.eig.restarts;
  diag.matvecs = spec.eig.matvecs;
  for (double r : spec.eig.residuals) diag.max_eigen_residual = std::max(diag.max_eigen_residual, r);
  SpectralEmbedding emb = stage("embed", timings, [&] { return embed_from(spec.op, spec.eig, spec.k, cfg.row_normalize); });

  EmbeddedDataset data;
  data.train_rows = gather_rows(emb.vectors, graph.range(DomainKind::Source, 0));
  data.train_labels = *source.labels;
  data.test_rows = gather_rows(emb.vectors, graph.range(DomainKind::Target));
  Labels predictions = stage("classify", timings, [&] { return fit_predict(data, cfg.classifier, cfg.seed, n_classes); });
  std::optional<EvalReport> report;
  if (target.labeled()) report = evaluate(predictions, *target.labels, n_classes);

  return SeotRun{
      .barycenter = std::nullopt,
      .graph = std::move(graph),
      .embedding = std::move(emb),
      .chosen_k = spec.k,
      .gaps = std::move(spec.gaps),
      .k_min = spec.k_min,
      .k_max = spec.k_max,
      .n_classes = n_classes,
      .predictions = std::move(predictions),
      .report = std::move(report),
      .timings = std::move(timings),
      .diagnostics = std::move(diag),
  };
}

}  // namespace seot
