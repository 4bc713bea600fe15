#include "seot/barycenter.hpp"

#include "seot/error.hpp"
#include "seot/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace seot {
namespace {

RowMatrix pool_points(const std::vector<LabeledDomain>& domains) {
  Eigen::Index total = 0;
  for (const auto& d : domains) total += static_cast<Eigen::Index>(d.size());
  RowMatrix pooled(total, static_cast<Eigen::Index>(domains.front().dim()));
  Eigen::Index offset = 0;
  for (const auto& d : domains) {
    const auto& x = d.measure.points().values();
    pooled.middleRows(offset, x.rows()) = x;
    offset += x.rows();
  }
  return pooled;
}

std::vector<Eigen::Index> random_subset(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

// k-means++ seeding: each next atom is drawn with probability proportional to
// the squared distance to the nearest atom chosen so far.
std::vector<Eigen::Index> kmeanspp(const RowMatrix& x, Eigen::Index k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> chosen;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto take = [&](Eigen::Index i) {
    chosen.push_back(i);
    taken[static_cast<std::size_t>(i)] = 1;
  };
  take(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));

  Vector d2 = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(chosen.size()) < k) {
    const double total = d2.sum();
    Eigen::Index next = -1;
    if (total > 0.0) {
      double u = unit(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        next = i;
        u -= d2[i];
        if (u < 0.0) break;
      }
    } else {
      // Fewer distinct points than atoms: fall back to an unused index.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!taken[static_cast<std::size_t>(i)]) free.push_back(i);
      next = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    take(next);
    d2 = d2.cwiseMin((x.rowwise() - x.row(next)).rowwise().squaredNorm());
    d2[next] = 0.0;
  }
  return chosen;
}

std::vector<double> normalized_source_weights(const BarycenterConfig& cfg, std::size_t n_sources) {
  if (cfg.source_weights.empty())
    return std::vector<double>(n_sources, 1.0 / static_cast<double>(n_sources));
  if (cfg.source_weights.size() != n_sources)
    throw Error(ErrorKind::InvalidInput, "source_weights length does not match number of sources");
  double total = 0.0;
  for (double w : cfg.source_weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::InvalidInput, "source_weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw Error(ErrorKind::InvalidInput, "source_weights must sum to 1");
  std::vector<double> w = cfg.source_weights;
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

Barycenter fit_barycenter(const std::vector<LabeledDomain>& sources, const BarycenterConfig& cfg,
                          const SinkhornConfig& ot_cfg, double p) {
  if (sources.empty()) throw Error(ErrorKind::InvalidInput, "fit_barycenter: no source domains");
  if (p != 2.0)
    throw Error(ErrorKind::UnsupportedCost,
                "free-support barycenter update requires squared Euclidean cost (p = 2)");
  ot_cfg.validate();
  const std::size_t dim = sources.front().dim();
  std::size_t total = 0, smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& s : sources) {
    if (s.dim() != dim) throw Error(ErrorKind::ShapeError, "sources have different feature dimensions");
    if (!s.labeled()) throw Error(ErrorKind::InvalidInput, "every source domain must be labeled");
    total += s.size();
    smallest = std::min(smallest, s.size());
  }
  const auto n_atoms = static_cast<Eigen::Index>(cfg.n_atoms > 0 ? static_cast<std::size_t>(cfg.n_atoms)
                                                                 : smallest);
  if (cfg.n_atoms < 0) throw Error(ErrorKind::InvalidInput, "n_atoms must be positive");
  if (static_cast<std::size_t>(n_atoms) > total)
    throw Error(ErrorKind::InvalidInput, "n_atoms (" + std::to_string(n_atoms) +
                                             ") exceeds total number of source samples (" +
                                             std::to_string(total) + ")");
  if (n_atoms < count_classes(sources))
    throw Error(ErrorKind::InvalidInput, "n_atoms must be at least the number of classes");
  if (cfg.max_outer_iter < 1) throw Error(ErrorKind::InvalidInput, "max_outer_iter must be >= 1");

  const std::vector<double> w = normalized_source_weights(cfg, sources.size());

  const RowMatrix pooled = pool_points(sources);
  auto rng = make_rng(cfg.seed, "barycenter-init");
  const auto init_idx = cfg.init == BarycenterInit::KMeansPlusPlus
                            ? kmeanspp(pooled, n_atoms, rng)
                            : random_subset(pooled.rows(), n_atoms, rng);
  RowMatrix support(n_atoms, pooled.cols());
  for (Eigen::Index k = 0; k < n_atoms; ++k) support.row(k) = pooled.row(init_idx[static_cast<std::size_t>(k)]);

  std::vector<TransportPlan> plans(sources.size());
  std::vector<double> objective_trace, cost_trace;
  bool converged = false;
  int outer = 0;

  for (outer = 1; outer <= cfg.max_outer_iter; ++outer) {
    const DataMatrix atoms(support);
    const DiscreteMeasure mu_b = uniform_measure(atoms);
    double objective = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const CostMatrix c = cost_matrix(atoms, sources[i].measure.points(), 2.0);
      const TransportPlan* warm = plans[i].empty() ? nullptr : &plans[i];
      plans[i] = sinkhorn(mu_b, sources[i].measure, c, ot_cfg, warm);
      objective += w[i] * plans[i].dual_objective;
      cost += w[i] * plans[i].cost;
    }
    objective_trace.push_back(objective);
    cost_trace.push_back(cost);

    // Barycentric projection, normalized by the achieved row mass so the
    // update is the exact minimizer of the weighted cost for these plans.
    RowMatrix numer = RowMatrix::Zero(n_atoms, support.cols());
    Vector mass = Vector::Zero(n_atoms);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      numer += w[i] * (plans[i].gamma * sources[i].measure.points().values());
      mass += w[i] * plans[i].gamma.rowwise().sum();
    }
    double max_move = 0.0;
    for (Eigen::Index k = 0; k < n_atoms; ++k) {
      if (!(mass[k] > 0.0)) continue;
      const Eigen::RowVectorXd next = numer.row(k) / mass[k];
      max_move = std::max(max_move, (next - support.row(k)).norm());
      support.row(k) = next;
    }
    if (max_move < cfg.support_tol) {
      converged = true;
      break;
    }
  }

  // Plans are left consistent with the final support.
  const DataMatrix atoms(support);
  const DiscreteMeasure mu_b = uniform_measure(atoms);
  bool plans_ok = true;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const CostMatrix c = cost_matrix(atoms, sources[i].measure.points(), 2.0);
    plans[i] = sinkhorn(mu_b, sources[i].measure, c, ot_cfg, &plans[i]);
    plans_ok = plans_ok && plans[i].converged;
  }

  Barycenter bary{
      .support = atoms,
      .weights = mu_b.weights(),
      .atom_labels = {},
      .source_weights = w,
      .plans_to_sources = std::move(plans),
      .plan_to_target = {},
      .objective_trace = std::move(objective_trace),
      .transport_cost_trace = std::move(cost_trace),
      .outer_iterations = std::min(outer, cfg.max_outer_iter),
      .converged = converged,
      .plans_converged = plans_ok,
      .fallback_labeled_atoms = {},
  };
  bary.atom_labels = assign_atom_labels(bary, sources, &bary.fallback_labeled_atoms);
  return bary;
}

Labels assign_atom_labels(const Barycenter& bary, const std::vector<LabeledDomain>& sources,
                          std::vector<int>* fallback) {
  if (bary.plans_to_sources.size() != sources.size())
    throw Error(ErrorKind::InvalidState, "assign_atom_labels: plans do not match sources");
  const int n_classes = count_classes(sources);
  const auto n_atoms = static_cast<Eigen::Index>(bary.n_atoms());
  const std::vector<double> w =
      bary.source_weights.size() == sources.size()
          ? bary.source_weights
          : std::vector<double>(sources.size(), 1.0 / static_cast<double>(sources.size()));

  RowMatrix class_mass = RowMatrix::Zero(n_atoms, std::max(n_classes, 1));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!sources[i].labels) throw Error(ErrorKind::InvalidInput, "source domain is unlabeled");
    const auto& gamma = bary.plans_to_sources[i].gamma;
    const auto& y = *sources[i].labels;
    if (gamma.rows() != n_atoms || static_cast<std::size_t>(gamma.cols()) != y.size())
      throw Error(ErrorKind::ShapeError, "assign_atom_labels: plan shape mismatch");
    for (Eigen::Index j = 0; j < gamma.cols(); ++j)
      class_mass.col(y[static_cast<std::size_t>(j)]) += w[i] * gamma.col(j);
  }

  Labels labels(static_cast<std::size_t>(n_atoms), 0);
  if (fallback) fallback->clear();
  for (Eigen::Index k = 0; k < n_atoms; ++k) {
    double best = 0.0;
    int best_c = -1;
    for (Eigen::Index c = 0; c < class_mass.cols(); ++c)
      if (class_mass(k, c) > best) {  // strict: ties keep the smaller id
        best = class_mass(k, c);
        best_c = static_cast<int>(c);
      }
    if (best_c < 0) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& s : sources) {
        const auto& x = s.measure.points().values();
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
          const double d = (x.row(j) - bary.support.row(static_cast<std::size_t>(k))).squaredNorm();
          if (d < nearest) {
            nearest = d;
            best_c = (*s.labels)[static_cast<std::size_t>(j)];
          }
        }
      }
      if (fallback) fallback->push_back(static_cast<int>(k));
    }
    labels[static_cast<std::size_t>(k)] = best_c;
  }
  return labels;
}

Barycenter attach_target(const Barycenter& bary, const LabeledDomain& target,
                         const SinkhornConfig& ot_cfg, double p) {
  if (target.dim() != bary.support.cols())
    throw Error(ErrorKind::ShapeError, "target feature dimension differs from barycenter support");
  Barycenter out = bary;
  const DiscreteMeasure mu_b(bary.support, bary.weights);
  const CostMatrix c = cost_matrix(bary.support, target.measure.points(), p);
  out.plan_to_target = sinkhorn(mu_b, target.measure, c, ot_cfg);
  return out;
}

}  // namespace seot
