#pragma once

#include "seot/measures.hpp"
#include "seot/ot.hpp"

#include <cstdint>
#include <vector>

namespace seot {

enum class BarycenterInit { RandomSubset, KMeansPlusPlus };

struct BarycenterConfig {
  int n_atoms = 0;                     // 0: size of the smallest source
  std::vector<double> source_weights;  // empty: uniform
  int max_outer_iter = 100;
  double support_tol = 1e-5;
  BarycenterInit init = BarycenterInit::KMeansPlusPlus;
  std::uint64_t seed = 0;
};

/// Labeled free-support barycenter of the source domains together with the
/// entropic plans from its atoms to every domain.
struct Barycenter {
  DataMatrix support;
  Vector weights;
  Labels atom_labels;
  std::vector<double> source_weights;
  std::vector<TransportPlan> plans_to_sources;
  TransportPlan plan_to_target;  // empty until attach_target
  /// Weighted entropic OT objective sum_i w_i (<C_i, g_i> - eps H(g_i)) per outer
  /// iteration. This is the quantity the alternating scheme decreases.
  std::vector<double> objective_trace;
  /// Weighted plain transport cost sum_i w_i <C_i, g_i> per outer iteration.
  std::vector<double> transport_cost_trace;
  int outer_iterations = 0;
  bool converged = false;
  bool plans_converged = true;
  std::vector<int> fallback_labeled_atoms;

  std::size_t n_atoms() const { return support.rows(); }
  bool has_target() const { return !plan_to_target.empty(); }
};

/// Alternates entropic OT solves from the atoms to each source with the
/// squared-Euclidean barycentric projection of the atoms. Only p = 2 is
/// supported (UnsupportedCost otherwise). Atom labels are assigned from the
/// final plans.
Barycenter fit_barycenter(const std::vector<LabeledDomain>& sources, const BarycenterConfig& cfg,
                          const SinkhornConfig& ot_cfg, double p = 2.0);

/// Atom k gets argmax_c sum_i w_i sum_{j : y_j = c} gamma_i(k, j); ties go to
/// the smaller class id. Atoms receiving no mass take the label of the nearest
/// source sample and are listed in `fallback` when given.
Labels assign_atom_labels(const Barycenter& bary, const std::vector<LabeledDomain>& sources,
                          std::vector<int>* fallback = nullptr);

/// Solves the plan from the barycenter to the target; everything else is
/// copied unchanged.
Barycenter attach_target(const Barycenter& bary, const LabeledDomain& target,
                         const SinkhornConfig& ot_cfg, double p = 2.0);

}  // namespace seot
