#include "seot/spectral.hpp"

#include "seot/error.hpp"
#include "seot/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace seot {

LaplacianOperator::LaplacianOperator(const CrossDomainGraph& graph, IsolatedPolicy policy)
    : graph_size_(graph.size()), policy_(policy) {
  const std::size_t k = graph.size();
  const Vector deg = graph.degrees();
  inv_sqrt_degree_ = Vector::Zero(static_cast<Eigen::Index>(k));
  std::vector<std::size_t> op_index(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const double d = deg[static_cast<Eigen::Index>(i)];
    if (d > 0.0) {
      inv_sqrt_degree_[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(d);
    } else if (policy == IsolatedPolicy::SelfLoop) {
      inv_sqrt_degree_[static_cast<Eigen::Index>(i)] = 1.0;
    } else {
      continue;
    }
    op_index[i] = active_.size();
    active_.push_back(i);
  }

  const auto& a = graph.adjacency();
  normalized_.rows = normalized_.cols = active_.size();
  normalized_.row_ptr.assign(active_.size() + 1, 0);
  for (std::size_t r = 0; r < active_.size(); ++r) {
    const std::size_t g = active_[r];
    const double sg = inv_sqrt_degree_[static_cast<Eigen::Index>(g)];
    if (a.row_ptr[g] == a.row_ptr[g + 1]) {
      normalized_.col_idx.push_back(static_cast<std::uint32_t>(r));
      normalized_.values.push_back(1.0);
    }
    for (auto q = a.row_ptr[g]; q < a.row_ptr[g + 1]; ++q) {
      const std::size_t c = a.col_idx[q];
      normalized_.col_idx.push_back(static_cast<std::uint32_t>(op_index[c]));
      normalized_.values.push_back(a.values[q] * sg * inv_sqrt_degree_[static_cast<Eigen::Index>(c)]);
    }
    normalized_.row_ptr[r + 1] = normalized_.values.size();
  }
}

void LaplacianOperator::apply_normalized(const Vector& x, Vector& y) const {
  y.resize(x.size());
  kernels::parallel::csr_matvec(normalized_, x.data(), y.data());
}

void LaplacianOperator::apply(const Vector& x, Vector& y) const {
  apply_normalized(x, y);
  y = x - y;
}

Vector LaplacianOperator::apply(const Vector& x) const {
  Vector y;
  apply(x, y);
  return y;
}

LaplacianOperator laplacian(const CrossDomainGraph& graph, IsolatedPolicy policy) {
  return LaplacianOperator(graph, policy);
}

namespace {

class TimedOperator {
 public:
  explicit TimedOperator(const LaplacianOperator& op) : op_(op) {}

  void operator()(const Vector& x, Vector& y) {
    const auto t0 = std::chrono::steady_clock::now();
    op_.apply_normalized(x, y);
    seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++count_;
  }

  std::size_t count() const { return count_; }
  double seconds() const { return seconds_; }

 private:
  const LaplacianOperator& op_;
  std::size_t count_ = 0;
  double seconds_ = 0.0;
};

// Two passes of classical Gram-Schmidt against the columns of `basis`.
void orthogonalize(Vector& w, const Eigen::Ref<const Eigen::MatrixXd>& basis) {
  if (basis.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) w -= basis * (basis.transpose() * w);
}

Vector random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v / v.norm();
}

void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg]) + 1e-12) arg = i;
  if (v[arg] < 0.0) v = -v;
}

// Orthonormalizes w against locked and basis, repeating while cancellation
// is heavy. False when w lies numerically in their span.
bool deflate(Vector& w, const Eigen::MatrixXd& locked, const Eigen::MatrixXd& basis) {
  double norm = w.norm();
  if (!(norm > 0.0)) return false;
  const double original = norm;
  for (int pass = 0; pass < 4; ++pass) {
    orthogonalize(w, locked);
    orthogonalize(w, basis);
    const double after = w.norm();
    if (after < 1e-10 * original) return false;
    const bool settled = after > 0.5 * norm;
    w /= after;
    norm = 1.0;
    if (settled) return true;
  }
  return false;
}

}  // namespace

EigenResult smallest_eigenpairs(const LaplacianOperator& op, std::size_t m,
                                const EigenSolverParams& params) {
  const std::size_t n = op.dim();
  if (m < 1 || m > n)
    throw Error(ErrorKind::InvalidInput, "requested " + std::to_string(m) +
                                             " eigenpairs from an operator of dimension " +
                                             std::to_string(n));
  if (!(params.tol > 0.0)) throw Error(ErrorKind::InvalidInput, "eigensolver tol must be > 0");

  const auto ni = static_cast<Eigen::Index>(n);
  auto rng = make_rng(params.seed, "eigensolver-start");
  TimedOperator matvec(op);
  const std::size_t krylov = params.krylov_dim > 0 ? static_cast<std::size_t>(params.krylov_dim)
                                                   : std::max<std::size_t>(3 * m + 20, 60);

  // Thick-restart Lanczos with locking. V holds the active orthonormal basis
  // and W = S V; each cycle extends V, does Rayleigh-Ritz on all of it, locks
  // converged pairs and keeps the leading unconverged Ritz vectors.
  Eigen::MatrixXd locked(ni, 0);
  std::vector<double> locked_sigma;
  Eigen::MatrixXd basis(ni, 0), image(ni, 0);
  Vector next = random_unit(n, rng);
  Vector w(ni), sy(ni);
  bool done = false;
  bool verifying = false;
  int cycle = 0;
  double worst_unconverged = std::numeric_limits<double>::infinity();

  auto mth_largest_locked = [&] {
    std::vector<double> s = locked_sigma;
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m - 1), s.end(), std::greater<>());
    return s[m - 1];
  };
  auto append = [](Eigen::MatrixXd& mat, const Vector& col) {
    mat.conservativeResize(Eigen::NoChange, mat.cols() + 1);
    mat.col(mat.cols() - 1) = col;
  };

  for (; cycle < params.max_restarts && !done; ++cycle) {
    const auto room = static_cast<Eigen::Index>(std::min(krylov, n - static_cast<std::size_t>(locked.cols())));
    while (basis.cols() < room) {
      Vector q = next;
      if (!deflate(q, locked, basis)) {
        // Invariant subspace reached; continue in a fresh direction.
        q = random_unit(n, rng);
        if (!deflate(q, locked, basis)) break;
      }
      matvec(q, w);
      append(basis, q);
      append(image, w);
      next = w;
    }
    const Eigen::Index dim = basis.cols();
    if (dim == 0) {
      done = true;
      break;
    }

    Eigen::MatrixXd proj = basis.transpose() * image;
    proj = 0.5 * (proj + proj.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(proj);
    const Vector& theta = rr.eigenvalues();  // ascending
    const Eigen::MatrixXd ritz = basis * rr.eigenvectors();
    const Eigen::MatrixXd ritz_image = image * rr.eigenvectors();

    std::vector<double> resid(static_cast<std::size_t>(dim));
    for (Eigen::Index r = 0; r < dim; ++r)
      resid[static_cast<std::size_t>(r)] = (ritz_image.col(r) - theta[r] * ritz.col(r)).norm();

    // S = I - L has spectrum in [-1, 1], so m locked copies of 1 are final.
    if (locked_sigma.size() >= m && mth_largest_locked() >= 1.0 - params.tol) {
      done = true;
      break;
    }
    const bool top_converged = resid[static_cast<std::size_t>(dim - 1)] <= params.tol;
    if (top_converged && locked_sigma.size() >= m && theta[dim - 1] <= mth_largest_locked() + params.tol) {
      if (verifying) {
        done = true;
        break;
      }
      // A Krylov space holds one direction per distinct eigenvalue, so copies of
      // a repeated eigenvalue can hide from it. Confirm from a fresh random
      // start in the deflated space before accepting.
      verifying = true;
      basis.resize(ni, 0);
      image.resize(ni, 0);
      next = random_unit(n, rng);
      continue;
    }

    // Lock converged pairs among the leading ones; keep the rest of the lead.
    const std::size_t need = m > locked_sigma.size() ? m - locked_sigma.size() : 1;
    const auto lead = static_cast<Eigen::Index>(std::min<std::size_t>(need + 5, static_cast<std::size_t>(dim)));
    const auto keep_max = std::max<Eigen::Index>(dim / 2, 1);
    // Extra copies of a value already among the wanted m do not change the
    // answer, so only a larger newcomer restarts the verification.
    const double bar = locked_sigma.size() >= m ? mth_largest_locked() + params.tol
                                                : -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd kept(ni, 0), kept_image(ni, 0);
    worst_unconverged = 0.0;
    for (Eigen::Index r = dim - 1; r >= 0; --r) {
      const bool in_lead = r >= dim - lead;
      if (in_lead && resid[static_cast<std::size_t>(r)] <= params.tol) {
        append(locked, ritz.col(r));
        locked_sigma.push_back(theta[r]);
        if (theta[r] > bar) verifying = false;
        continue;
      }
      if (in_lead) worst_unconverged = std::max(worst_unconverged, resid[static_cast<std::size_t>(r)]);
      if (kept.cols() < keep_max) {
        append(kept, ritz.col(r));
        append(kept_image, ritz_image.col(r));
      }
    }
    if (static_cast<std::size_t>(locked.cols()) >= n) {
      done = true;
      break;
    }
    // Continue from the Lanczos residual of the whole cycle.
    orthogonalize(next, basis);
    basis = std::move(kept);
    image = std::move(kept_image);
  }

  if (!done || locked_sigma.size() < m) {
    throw Error(ErrorKind::IterativeSolverError,
                "Lanczos did not converge within " + std::to_string(params.max_restarts) +
                    " restarts; locked " + std::to_string(locked_sigma.size()) + " of " + std::to_string(m) +
                    " pairs, worst residual " + std::to_string(worst_unconverged));
  }

  std::vector<std::size_t> order(locked_sigma.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return locked_sigma[a] > locked_sigma[b]; });

  EigenResult result;
  const auto mi = static_cast<Eigen::Index>(m);
  result.eigenvalues.resize(mi);
  result.eigenvectors.resize(ni, mi);
  result.residuals.resize(m);
  double block = 0.0;
  for (Eigen::Index c = 0; c < mi; ++c) {
    const std::size_t idx = order[static_cast<std::size_t>(c)];
    result.eigenvectors.col(c) = locked.col(static_cast<Eigen::Index>(idx));
    fix_sign(result.eigenvectors.col(c));
    const Vector v = result.eigenvectors.col(c);
    matvec(v, sy);
    const double sigma = v.dot(sy);
    result.eigenvalues[c] = 1.0 - sigma;
    const double resid = (sy - sigma * v).norm();
    result.residuals[static_cast<std::size_t>(c)] = resid;
    block += resid * resid;
  }
  result.block_residual = std::sqrt(block);
  result.restarts = cycle;
  result.matvecs = matvec.count();
  result.matvec_seconds = matvec.seconds();
  return result;
}

SpectralEmbedding embed_from(const LaplacianOperator& op, const EigenResult& eig, std::size_t k,
                             bool row_normalize) {
  if (k < 1 || k > static_cast<std::size_t>(eig.eigenvalues.size()))
    throw Error(ErrorKind::InvalidInput, "embedding dimension " + std::to_string(k) +
                                             " not covered by the computed spectrum");
  const auto ki = static_cast<Eigen::Index>(k);
  SpectralEmbedding emb;
  emb.k = k;
  emb.eigenvalues = eig.eigenvalues;
  emb.raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.graph_size()), ki);
  const auto& active = op.active_nodes();
  for (std::size_t r = 0; r < active.size(); ++r)
    emb.raw.row(static_cast<Eigen::Index>(active[r])) = eig.eigenvectors.row(static_cast<Eigen::Index>(r)).head(ki);
  emb.vectors = emb.raw;
  emb.row_normalized = row_normalize;
  if (row_normalize) {
    for (Eigen::Index r = 0; r < emb.vectors.rows(); ++r) {
      const double norm = emb.vectors.row(r).norm();
      if (norm > 0.0) emb.vectors.row(r) /= norm;
    }
  }
  return emb;
}

SpectralEmbedding embed(const LaplacianOperator& op, std::size_t k, const EmbedParams& params) {
  if (k < 1 || k >= op.graph_size() || k > op.dim())
    throw Error(ErrorKind::InvalidInput, "embedding dimension must satisfy 1 <= k < K");
  const std::size_t m = std::max(k, std::min(op.dim() - 1, k + params.gap_margin));
  const EigenResult eig = smallest_eigenpairs(op, m, params.solver);
  return embed_from(op, eig, k, params.row_normalize);
}

GapSelection select_k(const Vector& eigenvalues, std::size_t n_classes, std::size_t k_min,
                      std::size_t k_max) {
  const auto count = static_cast<std::size_t>(eigenvalues.size());
  if (k_min < 1 || k_min > k_max)
    throw Error(ErrorKind::InvalidInput, "select_k needs 1 <= k_min <= k_max");
  if (k_min < n_classes) throw Error(ErrorKind::InvalidInput, "select_k needs k_min >= n_classes");
  if (k_max >= count)
    throw Error(ErrorKind::InvalidInput, "k_max = " + std::to_string(k_max) + " needs at least " +
                                             std::to_string(k_max + 1) + " eigenvalues, have " +
                                             std::to_string(count));
  GapSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = k_min; j <= k_max; ++j) {
    // 1-based j: lambda_{j+1} - lambda_j
    const double gap = eigenvalues[static_cast<Eigen::Index>(j)] - eigenvalues[static_cast<Eigen::Index>(j - 1)];
    sel.gaps.push_back(gap);
    if (gap > best) {
      best = gap;
      sel.k = j;
    }
  }
  sel.gap_at_n_classes = n_classes >= 1 && n_classes < count
                             ? eigenvalues[static_cast<Eigen::Index>(n_classes)] -
                                   eigenvalues[static_cast<Eigen::Index>(n_classes - 1)]
                             : std::numeric_limits<double>::quiet_NaN();
  return sel;
}

}  // namespace seot
