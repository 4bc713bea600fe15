#include "seot/ot.hpp"

#include "seot/error.hpp"
#include "seot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace seot {

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "sinkhorn epsilon must be > 0");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "sinkhorn tol must be > 0");
  if (max_iter < 1) throw Error(ErrorKind::InvalidInput, "sinkhorn max_iter must be >= 1");
  if (!(omega >= 1.0 && omega < 2.0))
    throw Error(ErrorKind::InvalidInput, "sinkhorn omega must be in [1, 2)");
}

namespace {

void check_shapes(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost) {
  if (cost.rows() != mu.size() || cost.cols() != nu.size())
    throw Error(ErrorKind::ShapeError,
                "cost matrix is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                    " but measures have sizes " + std::to_string(mu.size()) + " and " +
                    std::to_string(nu.size()));
}

Vector safe_log(const Vector& w) {
  Vector out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    out[i] = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
  return out;
}

double l1_error(const Vector& achieved, const Vector& target) {
  return (achieved - target).cwiseAbs().sum();
}

double dual_value(const Vector& f, const Vector& g, const DiscreteMeasure& mu,
                  const DiscreteMeasure& nu) {
  // Column marginals are exact after the g sweep, so the mass term cancels.
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (mu.weights()[i] > 0.0) acc += f[i] * mu.weights()[i];
  for (Eigen::Index j = 0; j < g.size(); ++j)
    if (nu.weights()[j] > 0.0) acc += g[j] * nu.weights()[j];
  return acc;
}

void finalize(TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
              const CostMatrix& cost) {
  const double row_err = l1_error(plan.gamma.rowwise().sum(), mu.weights());
  const double col_err = l1_error(plan.gamma.colwise().sum().transpose(), nu.weights());
  plan.marginal_error = std::max(row_err, col_err);
  plan.cost = transport_cost(plan.gamma, cost);
  if (plan.f.size() == plan.gamma.rows() && plan.g.size() == plan.gamma.cols())
    plan.dual_objective = dual_value(plan.f, plan.g, mu, nu) - plan.epsilon * (plan.gamma.sum() - 1.0);
}

void nan_guard(const Vector& v, int iteration) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isnan(v[i]))
      throw Error(ErrorKind::NumericalError,
                  "sinkhorn produced NaN at iteration " + std::to_string(iteration));
}

// Scaling vectors are folded into the potentials once any |log u|, |log v| exceeds this.
constexpr double kAbsorbThreshold = 40.0;
// Marginal error below which the solver switches from scaling sweeps to Newton steps.
constexpr double kNewtonSwitch = 1e-3;
// Epsilon scaling starts at the largest eps * 3^j not above this fraction of max(C).
constexpr double kScalingStart = 0.1;
constexpr double kScalingFactor = 3.0;
// Kernel entries below this are dropped; scaled by u, v within exp(+-kAbsorbThreshold)
// they stay far below any marginal and never reach the subnormal range.
constexpr double kKernelFlush = 1e-200;
constexpr double kSchurFlush = 1e-150;

double marginal_l1(const Vector& s, const Vector& k_other, const Vector& target) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) err += std::abs(s[i] * k_other[i] - target[i]);
  return err;
}

// One block of dual ascent in scaled form. Per coordinate the dual reads
// t log s - s k, maximized at s* = t / k; the relaxed step s^(1-omega) s*^omega is
// kept only when it does not lower that term.
void scaling_update(const Vector& target, const Vector& k_other, double omega, Vector& s) {
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double t = target[i];
    if (t <= 0.0) {
      s[i] = 0.0;
      continue;
    }
    const double k = k_other[i];
    const double star = t / k;
    double next = star;
    if (omega != 1.0 && s[i] > 0.0 && std::isfinite(star)) {
      const double relaxed = std::exp((1.0 - omega) * std::log(s[i]) + omega * std::log(star));
      if (std::isfinite(relaxed) &&
          t * std::log(relaxed) - relaxed * k >= t * std::log(s[i]) - s[i] * k)
        next = relaxed;
    }
    s[i] = next;
  }
}

bool in_safe_range(const Vector& s) {
  static const double hi = std::exp(kAbsorbThreshold);
  static const double lo = std::exp(-kAbsorbThreshold);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (!(s[i] <= hi) || (s[i] > 0.0 && s[i] < lo)) return false;
  return true;
}

Vector absorbed(const Vector& pot, const Vector& s, double eps) {
  Vector out = pot;
  for (Eigen::Index i = 0; i < pot.size(); ++i)
    out[i] = s[i] > 0.0 ? pot[i] + eps * std::log(s[i]) : -std::numeric_limits<double>::infinity();
  return out;
}

// Dual state of the log-stabilized solver: potentials (f, g), the Gibbs kernel
// K absorbed at them, and scalings (u, v) on top, so the coupling is
// diag(u) K diag(v). K v and K^T u are cached between steps.
class StabilizedState {
 public:
  struct Snapshot {
    Vector f, g, u, v;
  };

  StabilizedState(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                  double eps)
      : a_(mu.weights()), b_(nu.weights()), cost_(cost.values), cost_t_(cost.values.transpose()),
        log_mu_(safe_log(a_)), log_nu_(safe_log(b_)), eps_(eps), mu_(mu), nu_(nu) {}

  // Exact alternating log-sum-exp sweep starting from g; resets the scalings.
  void lse_sweep(const Vector& g_start, int it) {
    const Eigen::Index n = cost_.rows(), m = cost_.cols();
    Vector lse_r(n), lse_c(m);
    kernels::parallel::logsumexp_rows(cost_, g_start, eps_, lse_r);
    f_ = eps_ * (log_mu_ - lse_r);
    nan_guard(f_, it);
    kernels::parallel::logsumexp_rows(cost_t_, f_, eps_, lse_c);
    g_ = eps_ * (log_nu_ - lse_c);
    nan_guard(g_, it);
    rebuild();
  }

  double marginal_error() {
    return std::max(marginal_l1(u_, kv(), a_), marginal_l1(v_, ktu(), b_));
  }

  double dual() {
    const double mass = u_.dot(kv());
    return dual_value(absorbed(f_, u_, eps_), absorbed(g_, v_, eps_), mu_, nu_) - eps_ * (mass - 1.0);
  }

  Snapshot snapshot() const { return {f_, g_, u_, v_}; }
  Vector g() const { return absorbed(g_, v_, eps_); }

  // Exact column update: columns match nu, so the total mass is one.
  bool balance() {
    scaling_update(b_, ktu(), 1.0, v_);
    kv_ok_ = false;
    return in_safe_range(v_);
  }

  // Relaxed scaling sweep; returns false when a scaling left the safe range.
  bool sweep(double omega) {
    scaling_update(a_, kv(), omega, u_);
    kv_ok_ = ktu_ok_ = false;
    if (!in_safe_range(u_)) return false;
    scaling_update(b_, ktu(), omega, v_);
    return in_safe_range(v_);
  }

  // Damped Newton step on the dual in log-scaling coordinates. The v block is
  // eliminated and the Schur complement diag(r) - P diag(1/c) P^T is factored
  // densely; it is singular along the constant vector, which the right-hand side
  // is orthogonal to, so a rank-one shift fixes the gauge. Returns false if no
  // ascent was found.
  bool newton_step() {
    const Eigen::Index n = a_.size(), m = b_.size();
    const Vector r = u_.cwiseProduct(kv());
    const Vector c = v_.cwiseProduct(ktu());
    const Vector grad_a = a_ - r, grad_b = b_ - c;

    const RowMatrix plan = u_.asDiagonal() * kern_ * v_.asDiagonal();
    Vector inv_c(m), inv_sqrt_c(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      inv_c[j] = c[j] > 0.0 ? 1.0 / c[j] : 0.0;
      inv_sqrt_c[j] = std::sqrt(inv_c[j]);
    }
    // Entries this small only add subnormal products, which are very slow.
    const RowMatrix w = (plan * inv_sqrt_c.asDiagonal()).unaryExpr([](double x) {
      return x < kSchurFlush ? 0.0 : x;
    });
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(n, n);
    schur.selfadjointView<Eigen::Lower>().rankUpdate(w, -1.0);
    Vector rhs = grad_a - plan * inv_c.cwiseProduct(grad_b);
    const double shift = r.sum() / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k <= i; ++k) schur(i, k) += shift;
      schur(i, i) += r[i];
      if (a_[i] <= 0.0) {
        schur.row(i).head(i).setZero();
        schur.col(i).tail(n - i).setZero();
        schur(i, i) = 1.0;
        rhs[i] = 0.0;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (a_[i] <= 0.0) schur.col(i).tail(n - i).setZero(), schur(i, i) = 1.0;
    Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower> ldlt(schur);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector dx = ldlt.solve(rhs);
    const Vector dy = inv_c.cwiseProduct(grad_b - plan.transpose() * dx);
    const double slope = grad_a.dot(dx) + grad_b.dot(dy);
    if (!dx.allFinite() || !dy.allFinite() || !(slope > 0.0)) return false;

    // Backtracking on the scaled dual <a, log u> + <b, log v> - sum(P).
    const Vector u0 = u_, v0 = v_;
    const double phi0 = -r.sum();
    for (double t = 1.0; t > 1e-10; t *= 0.5) {
      for (Eigen::Index i = 0; i < n; ++i) u_[i] = u0[i] * std::exp(t * dx[i]);
      for (Eigen::Index j = 0; j < m; ++j) v_[j] = v0[j] * std::exp(t * dy[j]);
      kv_ok_ = ktu_ok_ = false;
      const double phi = t * (a_.dot(dx) + b_.dot(dy)) - u_.dot(kv());
      if (std::isfinite(phi) && phi >= phi0 + 1e-4 * t * slope) {
        if (!in_safe_range(u_) || !in_safe_range(v_)) absorb();
        return true;
      }
    }
    u_ = u0;
    v_ = v0;
    kv_ok_ = ktu_ok_ = false;
    return false;
  }

  static void restore(const Snapshot& s, double eps, Vector& f, Vector& g) {
    f = absorbed(s.f, s.u, eps);
    g = absorbed(s.g, s.v, eps);
  }

 private:
  const Vector& kv() {
    if (!kv_ok_) kernels::parallel::dense_matvec(kern_, v_, kv_);
    kv_ok_ = true;
    return kv_;
  }
  const Vector& ktu() {
    if (!ktu_ok_) kernels::parallel::dense_matvec_t(kern_, u_, ktu_);
    ktu_ok_ = true;
    return ktu_;
  }

  void absorb() {
    f_ = absorbed(f_, u_, eps_);
    g_ = absorbed(g_, v_, eps_);
    rebuild();
  }

  void rebuild() {
    kernels::parallel::gibbs_kernel(cost_, f_, g_, eps_, kern_);
    kern_ = kern_.unaryExpr([](double x) { return x < kKernelFlush ? 0.0 : x; });
    u_ = Vector::Ones(f_.size());
    v_ = Vector::Ones(g_.size());
    kv_ok_ = ktu_ok_ = false;
  }

  const Vector& a_;
  const Vector& b_;
  const RowMatrix& cost_;
  const RowMatrix cost_t_;
  const Vector log_mu_, log_nu_;
  const double eps_;
  const DiscreteMeasure& mu_;
  const DiscreteMeasure& nu_;
  Vector f_, g_, u_, v_, kv_, ktu_;
  bool kv_ok_ = false, ktu_ok_ = false;
  RowMatrix kern_;
};

// Log-stabilized Sinkhorn. Exact log-sum-exp sweeps start the solve and recover
// from scalings that leave the safe range; in between, over-relaxed sweeps run
// exp-free against the absorbed kernel. Once the marginal error is small the
// solver finishes with Newton steps, which removes the slow linear tail at small
// epsilon. Every step is a dual ascent.
TransportPlan sinkhorn_log(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const CostMatrix& cost, const SinkhornConfig& cfg,
                           const TransportPlan* warm) {
  const double eps = cfg.epsilon;
  const Eigen::Index m = cost.values.cols();

  Vector g0 = Vector::Zero(m);
  if (warm && warm->g.size() == m && warm->g.allFinite()) g0 = warm->g;

  TransportPlan plan;
  plan.epsilon = eps;

  StabilizedState st(mu, nu, cost, eps);
  st.lse_sweep(g0, 1);
  if (cfg.record_dual) plan.dual_trace.push_back(st.dual());

  StabilizedState::Snapshot best;
  double best_err = std::numeric_limits<double>::infinity();
  int best_iter = 0;
  bool newton = false;
  bool balanced = false;

  for (int it = 2;; ++it) {
    // Score the iterate produced at it - 1.
    const double err = st.marginal_error();
    if (std::isnan(err))
      throw Error(ErrorKind::NumericalError,
                  "sinkhorn produced NaN at iteration " + std::to_string(it - 1));
    if (err < best_err) {
      best_err = err;
      best = st.snapshot();
      best_iter = it - 1;
    }
    if (err <= cfg.tol && balanced) {
      plan.converged = true;
      best = st.snapshot();
      best_iter = it - 1;
      break;
    }
    if (it > cfg.max_iter) break;

    newton = newton || err <= kNewtonSwitch;
    const Vector g_prev = st.g();
    balanced = err <= cfg.tol;
    if (balanced) {
      // Newton leaves both marginals slightly off; end on an exact column step.
      if (!st.balance()) st.lse_sweep(g_prev, it);
    } else if (!(newton && st.newton_step())) {
      if (!st.sweep(cfg.omega)) st.lse_sweep(g_prev, it);
    }
    if (cfg.record_dual) plan.dual_trace.push_back(st.dual());
  }

  plan.iterations = best_iter;
  StabilizedState::restore(best, eps, plan.f, plan.g);
  kernels::parallel::gibbs_kernel(cost.values, plan.f, plan.g, eps, plan.gamma);
  finalize(plan, mu, nu, cost);
  return plan;
}

TransportPlan sinkhorn_scaling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const CostMatrix& cost, const SinkhornConfig& cfg) {
  const double eps = cfg.epsilon;
  // Eigen's vectorized exp clamps its argument, so large costs would not underflow.
  const RowMatrix kernel = cost.values.unaryExpr([eps](double c) { return std::exp(-c / eps); });
  const Vector& a = mu.weights();
  const Vector& b = nu.weights();
  Vector u = Vector::Ones(a.size());
  Vector v = Vector::Ones(b.size());

  TransportPlan plan;
  plan.epsilon = eps;
  Vector best_u = u, best_v = v;
  double best_err = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= cfg.max_iter; ++it) {
    v = b.cwiseQuotient(kernel.transpose() * u);
    u = a.cwiseQuotient(kernel * v);
    if (!u.allFinite() || !v.allFinite())
      throw Error(ErrorKind::NumericalError,
                  "sinkhorn scaling vectors became non-finite at iteration " + std::to_string(it) +
                      " (kernel underflow; use log-domain mode)");
    // Rows are exact after the u update; score the column marginal.
    const double err = l1_error(v.cwiseProduct(kernel.transpose() * u), b);
    plan.iterations = it;
    if (err < best_err) {
      best_err = err;
      best_u = u;
      best_v = v;
    }
    if (cfg.record_dual) {
      Vector fu = eps * u.array().log().matrix();
      Vector gv = eps * v.array().log().matrix();
      plan.dual_trace.push_back(fu.dot(a) + gv.dot(b));
    }
    if (err <= cfg.tol) {
      plan.converged = true;
      break;
    }
  }
  plan.f = eps * best_u.array().log().matrix();
  plan.g = eps * best_v.array().log().matrix();
  plan.gamma = best_u.asDiagonal() * kernel * best_v.asDiagonal();
  finalize(plan, mu, nu, cost);
  return plan;
}

}  // namespace

TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       const SinkhornConfig& cfg, const TransportPlan* warm_start) {
  cfg.validate();
  check_shapes(mu, nu, cost);
  if (!cfg.log_domain) return sinkhorn_scaling(mu, nu, cost, cfg);
  if (warm_start || !cfg.epsilon_scaling || cost.values.size() == 0)
    return sinkhorn_log(mu, nu, cost, cfg, warm_start);

  std::vector<double> stages{cfg.epsilon};
  const double top = kScalingStart * cost.values.maxCoeff();
  while (stages.back() * kScalingFactor <= top) stages.push_back(stages.back() * kScalingFactor);
  SinkhornConfig stage_cfg = cfg;
  stage_cfg.record_dual = false;
  // max_iter bounds the iterations of all stages together.
  TransportPlan plan;
  int used = 0;
  for (std::size_t s = stages.size(); s-- > 1 && used + 1 < cfg.max_iter;) {
    stage_cfg.epsilon = stages[s];
    stage_cfg.max_iter = cfg.max_iter - used - 1;
    plan = sinkhorn_log(mu, nu, cost, stage_cfg, used ? &plan : nullptr);
    used += plan.converged ? plan.iterations : stage_cfg.max_iter;
  }
  stage_cfg = cfg;
  stage_cfg.max_iter = cfg.max_iter - used;
  plan = sinkhorn_log(mu, nu, cost, stage_cfg, used ? &plan : nullptr);
  plan.iterations += used;
  return plan;
}

double entropy(const RowMatrix& gamma) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    const double x = gamma.data()[i];
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double transport_cost(const RowMatrix& gamma, const CostMatrix& cost) {
  if (gamma.rows() != cost.values.rows() || gamma.cols() != cost.values.cols())
    throw Error(ErrorKind::ShapeError, "transport_cost: plan and cost shapes differ");
  return gamma.cwiseProduct(cost.values).sum();
}

TransportPlan exact_ot_oracle(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostMatrix& cost) {
  const std::size_t n = mu.size();
  if (n > 8 || nu.size() > 8)
    throw Error(ErrorKind::OracleTooLarge, "exact_ot_oracle supports at most 8 points");
  if (nu.size() != n || !mu.is_uniform() || !nu.is_uniform())
    throw Error(ErrorKind::UnsupportedByOracle,
                "exact_ot_oracle needs uniform measures of equal size");
  check_shapes(mu, nu, cost);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost.values(static_cast<Eigen::Index>(i), perm[i]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TransportPlan plan;
  const auto ni = static_cast<Eigen::Index>(n);
  plan.gamma = RowMatrix::Zero(ni, ni);
  for (std::size_t i = 0; i < n; ++i)
    plan.gamma(static_cast<Eigen::Index>(i), best[i]) = 1.0 / static_cast<double>(n);
  plan.converged = true;
  plan.epsilon = 0.0;
  finalize(plan, mu, nu, cost);
  return plan;
}

}  // namespace seot
