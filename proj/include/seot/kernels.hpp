#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel. The parallel
// versions split work by output entry only, so results are bitwise identical
// to the serial ones regardless of thread count.

#include "seot/measures.hpp"

#include <cstdint>
#include <vector>

namespace seot {

/// Compressed sparse row matrix, square or rectangular.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
};

namespace kernels {

namespace serial {

void pairwise_cost(const RowMatrix& xs, const RowMatrix& xt, double p, RowMatrix& out);

// out_i = log sum_j exp((potential_j - cost_ij) / epsilon)
void logsumexp_rows(const RowMatrix& cost, const Vector& potential, double epsilon, Vector& out);

void csr_matvec(const CsrMatrix& a, const double* x, double* y);

// y = A x and y = A^T x for a dense row-major A.
void dense_matvec(const RowMatrix& a, const Vector& x, Vector& y);
void dense_matvec_t(const RowMatrix& a, const Vector& x, Vector& y);

// out_ij = exp((f_i + g_j - cost_ij) / epsilon)
void gibbs_kernel(const RowMatrix& cost, const Vector& f, const Vector& g, double epsilon, RowMatrix& out);

}  // namespace serial

namespace parallel {

void pairwise_cost(const RowMatrix& xs, const RowMatrix& xt, double p, RowMatrix& out);
void logsumexp_rows(const RowMatrix& cost, const Vector& potential, double epsilon, Vector& out);
void csr_matvec(const CsrMatrix& a, const double* x, double* y);
void dense_matvec(const RowMatrix& a, const Vector& x, Vector& y);
void dense_matvec_t(const RowMatrix& a, const Vector& x, Vector& y);
void gibbs_kernel(const RowMatrix& cost, const Vector& f, const Vector& g, double epsilon, RowMatrix& out);

}  // namespace parallel

}  // namespace kernels
}  // namespace seot
