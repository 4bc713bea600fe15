#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace seot {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// Samples stored one per row. Guaranteed non-empty and finite.
class DataMatrix {
 public:
  explicit DataMatrix(RowMatrix values);
  DataMatrix(std::size_t rows, std::size_t cols, std::span<const double> row_major);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  const RowMatrix& values() const { return values_; }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }

 private:
  RowMatrix values_;
};

/// Empirical measure: support points with weights on the probability simplex.
class DiscreteMeasure {
 public:
  /// Weights are renormalized by their sum. A sum further than 1e-6 from one,
  /// a negative weight or a length mismatch throws InvalidInput.
  DiscreteMeasure(DataMatrix points, Vector weights);

  const DataMatrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  std::size_t size() const { return points_.rows(); }
  std::size_t dim() const { return points_.cols(); }
  bool is_uniform() const;

 private:
  DataMatrix points_;
  Vector weights_;
};

struct LabeledDomain {
  DiscreteMeasure measure;
  std::optional<Labels> labels;

  LabeledDomain(DiscreteMeasure m, std::optional<Labels> l = std::nullopt);

  std::size_t size() const { return measure.size(); }
  std::size_t dim() const { return measure.dim(); }
  bool labeled() const { return labels.has_value(); }
};

struct CostMatrix {
  RowMatrix values;
  double p = 2.0;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

DiscreteMeasure uniform_measure(const DataMatrix& points);

/// Pairwise cost ||xs_i - xt_j||^p. The p = 2 path skips the square root so the
/// diagonal of cost_matrix(X, X) is exactly zero.
CostMatrix cost_matrix(const DataMatrix& xs, const DataMatrix& xt, double p = 2.0);

/// Shifts and scales every column by mean and population standard deviation
/// pooled over all domains. Zero-variance columns pass through unchanged.
std::vector<LabeledDomain> standardize(const std::vector<LabeledDomain>& domains);

/// Largest label + 1 over all labeled domains (0 if none are labeled).
int count_classes(std::span<const LabeledDomain> domains);

}  // namespace seot
