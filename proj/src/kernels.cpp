#include "seot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seot::kernels {
namespace {

inline double row_cost(const RowMatrix& xs, const RowMatrix& xt, Eigen::Index i, Eigen::Index j,
                       double p) {
  double sq = 0.0;
  for (Eigen::Index c = 0; c < xs.cols(); ++c) {
    const double diff = xs(i, c) - xt(j, c);
    sq += diff * diff;
  }
  if (p == 2.0) return sq;
  if (p == 1.0) return std::sqrt(sq);
  return std::pow(std::sqrt(sq), p);
}

inline void cost_row(const RowMatrix& xs, const RowMatrix& xt, double p, RowMatrix& out,
                     Eigen::Index i) {
  for (Eigen::Index j = 0; j < xt.rows(); ++j) out(i, j) = row_cost(xs, xt, i, j, p);
}

inline double lse_row(const RowMatrix& cost, const Vector& potential, double epsilon,
                      Eigen::Index i) {
  const Eigen::Index n = cost.cols();
  const double* c = cost.data() + i * n;
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double z = (potential[j] - c[j]) / epsilon;
    if (z > hi) hi = z;
  }
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) acc += std::exp((potential[j] - c[j]) / epsilon - hi);
  return hi + std::log(acc);
}

inline void csr_row(const CsrMatrix& a, const double* x, double* y, std::size_t i) {
  double acc = 0.0;
  for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) acc += a.values[k] * x[a.col_idx[k]];
  y[i] = acc;
}

inline void dense_row(const RowMatrix& a, const Vector& x, Vector& y, Eigen::Index i) {
  y[i] = a.row(i).dot(x);
}

// y_j = sum_i a_ij x_i for j in [j0, j1).
inline void dense_tcols(const RowMatrix& a, const Vector& x, Vector& y, Eigen::Index j0,
                        Eigen::Index j1) {
  y.segment(j0, j1 - j0).noalias() = a.middleCols(j0, j1 - j0).transpose() * x;
}

constexpr Eigen::Index kColBlock = 256;

inline void gibbs_row(const RowMatrix& cost, const Vector& f, const Vector& g, double epsilon,
                      RowMatrix& out, Eigen::Index i) {
  const Eigen::Index n = cost.cols();
  for (Eigen::Index j = 0; j < n; ++j) out(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / epsilon);
}

}  // namespace

namespace serial {

void pairwise_cost(const RowMatrix& xs, const RowMatrix& xt, double p, RowMatrix& out) {
  out.resize(xs.rows(), xt.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) cost_row(xs, xt, p, out, i);
}

void logsumexp_rows(const RowMatrix& cost, const Vector& potential, double epsilon, Vector& out) {
  out.resize(cost.rows());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) out[i] = lse_row(cost, potential, epsilon, i);
}

void csr_matvec(const CsrMatrix& a, const double* x, double* y) {
  for (std::size_t i = 0; i < a.rows; ++i) csr_row(a, x, y, i);
}

void dense_matvec(const RowMatrix& a, const Vector& x, Vector& y) {
  y.resize(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) dense_row(a, x, y, i);
}

void dense_matvec_t(const RowMatrix& a, const Vector& x, Vector& y) {
  y.resize(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); j += kColBlock)
    dense_tcols(a, x, y, j, std::min(a.cols(), j + kColBlock));
}

void gibbs_kernel(const RowMatrix& cost, const Vector& f, const Vector& g, double epsilon, RowMatrix& out) {
  out.resize(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) gibbs_row(cost, f, g, epsilon, out, i);
}

}  // namespace serial

namespace parallel {

void pairwise_cost(const RowMatrix& xs, const RowMatrix& xt, double p, RowMatrix& out) {
  out.resize(xs.rows(), xt.rows());
  const Eigen::Index n = xs.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) cost_row(xs, xt, p, out, i);
}

void logsumexp_rows(const RowMatrix& cost, const Vector& potential, double epsilon, Vector& out) {
  out.resize(cost.rows());
  const Eigen::Index n = cost.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = lse_row(cost, potential, epsilon, i);
}

void csr_matvec(const CsrMatrix& a, const double* x, double* y) {
  const auto n = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) csr_row(a, x, y, static_cast<std::size_t>(i));
}

void dense_matvec(const RowMatrix& a, const Vector& x, Vector& y) {
  y.resize(a.rows());
  const Eigen::Index n = a.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) dense_row(a, x, y, i);
}

void dense_matvec_t(const RowMatrix& a, const Vector& x, Vector& y) {
  y.resize(a.cols());
  const Eigen::Index blocks = (a.cols() + kColBlock - 1) / kColBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b)
    dense_tcols(a, x, y, b * kColBlock, std::min(a.cols(), (b + 1) * kColBlock));
}

void gibbs_kernel(const RowMatrix& cost, const Vector& f, const Vector& g, double epsilon, RowMatrix& out) {
  out.resize(cost.rows(), cost.cols());
  const Eigen::Index n = cost.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) gibbs_row(cost, f, g, epsilon, out, i);
}

}  // namespace parallel
}  // namespace seot::kernels
