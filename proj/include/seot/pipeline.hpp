#pragma once

#include "seot/barycenter.hpp"
#include "seot/classify.hpp"
#include "seot/graph.hpp"
#include "seot/measures.hpp"
#include "seot/ot.hpp"
#include "seot/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seot {

/// Embedding dimension: fixed, or chosen by the eigengap over [k_min, k_max].
struct KMode {
  bool automatic = true;
  std::size_t k = 0;      // used when !automatic
  std::size_t k_min = 0;  // 0: number of classes
  std::size_t k_max = 0;  // 0: k_min + 5

  static KMode fixed(std::size_t k) { return {false, k, 0, 0}; }
  static KMode auto_gap(std::size_t k_min = 0, std::size_t k_max = 0) { return {true, 0, k_min, k_max}; }
};

struct SeotConfig {
  SinkhornConfig ot;
  BarycenterConfig bary;
  double prune_threshold = 1e-9;
  KMode k_mode;
  bool row_normalize = true;
  ClassifierConfig classifier;
  int n_classes = 0;  // 0: inferred from source labels
  std::uint64_t seed = 0;
  bool standardize = true;
  double cost_p = 2.0;
  IsolatedPolicy isolated_policy = IsolatedPolicy::SelfLoop;
  EigenSolverParams solver;
  std::size_t gap_margin = 5;
  bool train_on_sources_too = false;
};

struct SeotDiagnostics {
  std::vector<std::string> unconverged_plans;
  std::size_t isolated_nodes = 0;
  bool barycenter_converged = true;
  int barycenter_iterations = 0;
  std::vector<int> fallback_labeled_atoms;
  int eigensolver_restarts = 0;
  std::size_t matvecs = 0;
  double max_eigen_residual = 0.0;
};

struct SeotRun {
  std::optional<Barycenter> barycenter;  // absent on the direct two-domain path
  CrossDomainGraph graph;
  SpectralEmbedding embedding;
  std::size_t chosen_k = 0;
  GapSelection gaps;
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  int n_classes = 0;
  Labels predictions;  // one per target sample
  std::optional<EvalReport> report;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  SeotDiagnostics diagnostics;
};

/// Multi-source pipeline: standardize, fit the labeled barycenter, attach the
/// target, build the star graph, embed it and classify the target rows with a
/// model trained on the barycenter rows. Stage failures are rethrown with the
/// stage name prefixed and the original error kind.
SeotRun run_seot(const std::vector<LabeledDomain>& sources, const LabeledDomain& target,
                 const SeotConfig& cfg);

/// Two-domain variant. With skip_barycenter the bipartite graph of the direct
/// source-target plan is embedded and the source rows train the classifier;
/// otherwise this is run_seot with one source.
SeotRun run_two_domain(const LabeledDomain& source, const LabeledDomain& target, const SeotConfig& cfg,
                       bool skip_barycenter);

}  // namespace seot
