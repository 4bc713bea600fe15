#pragma once

#include "seot/measures.hpp"

#include <vector>

namespace seot {

struct SinkhornConfig {
  double epsilon = 1e-2;
  int max_iter = 10'000;
  double tol = 1e-8;  // L1 marginal error
  bool log_domain = true;
  // Over-relaxation factor in [1, 2) for the log-domain solver. Each coordinate
  // falls back to the plain update when the relaxed step would lower the dual.
  double omega = 1.9;
  bool record_dual = false;
  // Without a warm start, solve a short decreasing sequence of larger epsilons
  // first, each warm starting the next. Only the last stage is traced.
  bool epsilon_scaling = true;

  void validate() const;
};

/// Coupling between two measures plus the solver's diagnostics. The dual
/// potentials are kept so later solves on nearby problems can warm start.
struct TransportPlan {
  RowMatrix gamma;
  double cost = 0.0;
  int iterations = 0;
  double marginal_error = 0.0;
  double epsilon = 0.0;
  bool converged = false;
  /// Entropic dual value <f, mu> + <g, nu> - eps (sum(gamma) - 1). Equals the
  /// regularized primal optimum up to second order in the marginal error.
  double dual_objective = 0.0;
  Vector f;  // row potential
  Vector g;  // column potential
  std::vector<double> dual_trace;  // dual objective after each iteration, non-decreasing

  std::size_t rows() const { return static_cast<std::size_t>(gamma.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(gamma.cols()); }
  bool empty() const { return gamma.size() == 0; }
};

/// Entropic OT: minimizes <C, gamma> - epsilon * H(gamma) over couplings of
/// (mu, nu). Stops once the larger of the row and column marginal L1 errors is
/// at most cfg.tol. Returns the best iterate with
/// converged == false when max_iter runs out. Throws NumericalError when an
/// iterate turns NaN, which plain scaling does once the kernel underflows.
TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SinkhornConfig& cfg, const TransportPlan* warm_start = nullptr);

/// -sum gamma_ij log gamma_ij with 0 log 0 = 0.
double entropy(const RowMatrix& gamma);
inline double entropy(const TransportPlan& plan) { return entropy(plan.gamma); }

double transport_cost(const RowMatrix& gamma, const CostMatrix& cost);
inline double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  return transport_cost(plan.gamma, cost);
}

/// Exact OT between two uniform measures of equal size n <= 8 by enumerating
/// all permutation couplings. Ground truth for tests.
TransportPlan exact_ot_oracle(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostMatrix& cost);

}  // namespace seot
