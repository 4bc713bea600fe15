#pragma once

#include "seot/graph.hpp"
#include "seot/measures.hpp"

#include <cstdint>
#include <vector>

namespace seot {

enum class IsolatedPolicy { SelfLoop, Drop };

/// Matrix-free symmetric normalized Laplacian L = I - D^-1/2 A D^-1/2.
///
/// With SelfLoop an isolated node gets a unit self-loop (degree 1), so L acts
/// as zero on its indicator and it contributes one zero eigenvalue. With Drop
/// isolated nodes are removed and `active_nodes` maps operator indices back to
/// graph nodes.
class LaplacianOperator {
 public:
  LaplacianOperator(const CrossDomainGraph& graph, IsolatedPolicy policy = IsolatedPolicy::SelfLoop);

  /// Operator dimension (number of active nodes).
  std::size_t dim() const { return normalized_.rows; }
  std::size_t graph_size() const { return graph_size_; }
  IsolatedPolicy policy() const { return policy_; }
  const std::vector<std::size_t>& active_nodes() const { return active_; }
  /// Indexed by graph node; 1/sqrt(d_i), or 0 for dropped nodes.
  const Vector& inv_sqrt_degree() const { return inv_sqrt_degree_; }
  /// D^-1/2 A D^-1/2 restricted to the active nodes, including self-loops.
  const CsrMatrix& normalized_adjacency() const { return normalized_; }

  /// y = S x with S = D^-1/2 A D^-1/2.
  void apply_normalized(const Vector& x, Vector& y) const;
  /// y = L x.
  void apply(const Vector& x, Vector& y) const;
  Vector apply(const Vector& x) const;

 private:
  std::size_t graph_size_;
  IsolatedPolicy policy_;
  std::vector<std::size_t> active_;
  Vector inv_sqrt_degree_;
  CsrMatrix normalized_;
};

LaplacianOperator laplacian(const CrossDomainGraph& graph,
                            IsolatedPolicy policy = IsolatedPolicy::SelfLoop);

struct EigenSolverParams {
  double tol = 1e-9;       // per-pair residual bound ||L v - lambda v||_2
  int max_restarts = 200;  // Lanczos cycles before giving up
  int krylov_dim = 0;      // 0: chosen from m
  std::uint64_t seed = 0;
};

struct EigenResult {
  Vector eigenvalues;  // ascending, length m
  Eigen::MatrixXd eigenvectors;  // dim() x m, orthonormal columns
  std::vector<double> residuals;
  double block_residual = 0.0;  // ||L V - V diag(lambda)||_F
  int restarts = 0;
  std::size_t matvecs = 0;
  double matvec_seconds = 0.0;
};

/// The m algebraically smallest eigenpairs of L, computed by Lanczos with full
/// reorthogonalization on S = I - L (largest eigenvalues of S). Thick
/// restarts keep the leading unconverged Ritz vectors and converged pairs are
/// locked. Once the wanted pairs look converged, a fresh random start in the
/// complement of the locked vectors checks for missed repeated eigenvalues.
/// Throws InvalidInput when m is out of range and IterativeSolverError when
/// the restart budget runs out.
EigenResult smallest_eigenpairs(const LaplacianOperator& op, std::size_t m,
                                const EigenSolverParams& params = {});

struct SpectralEmbedding {
  Eigen::MatrixXd vectors;  // graph_size x k, row per node
  Eigen::MatrixXd raw;      // same before row normalization
  Vector eigenvalues;       // ascending, m >= k
  std::size_t k = 0;
  bool row_normalized = false;
};

struct EmbedParams {
  bool row_normalize = true;
  std::size_t gap_margin = 5;
  EigenSolverParams solver;
};

/// Rows of the eigenvectors for the k smallest eigenvalues. Dropped nodes get
/// zero rows; zero rows stay zero under row normalization.
SpectralEmbedding embed(const LaplacianOperator& op, std::size_t k, const EmbedParams& params = {});

/// Same as embed, reusing an already computed decomposition with at least k pairs.
SpectralEmbedding embed_from(const LaplacianOperator& op, const EigenResult& eig, std::size_t k,
                             bool row_normalize);

struct GapSelection {
  std::size_t k = 0;
  std::vector<double> gaps;      // gaps[j - k_min] = lambda_{j+1} - lambda_j, 1-based j
  double gap_at_n_classes = 0.0;  // lambda_{Nc+1} - lambda_{Nc}
};

/// Eigengap heuristic: k = argmax over j in [k_min, k_max] of
/// lambda_{j+1} - lambda_j with ties going to the smaller j.
GapSelection select_k(const Vector& eigenvalues, std::size_t n_classes, std::size_t k_min,
                      std::size_t k_max);

}  // namespace seot
