#include "seot/measures.hpp"

#include "seot/error.hpp"
#include "seot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seot {

DataMatrix::DataMatrix(RowMatrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw Error(ErrorKind::InvalidInput, "data matrix must have at least one row and one column");
  if (!values_.allFinite()) throw Error(ErrorKind::InvalidInput, "data matrix has non-finite entries");
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::span<const double> row_major)
    : DataMatrix([&] {
        if (row_major.size() != rows * cols)
          throw Error(ErrorKind::ShapeError, "buffer size does not match rows*cols");
        RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::copy(row_major.begin(), row_major.end(), m.data());
        return m;
      }()) {}

DiscreteMeasure::DiscreteMeasure(DataMatrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (static_cast<std::size_t>(weights_.size()) != points_.rows())
    throw Error(ErrorKind::InvalidInput, "weights length does not match number of points");
  if (!weights_.allFinite() || weights_.minCoeff() < 0.0)
    throw Error(ErrorKind::InvalidInput, "weights must be finite and nonnegative");
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-6)
    throw Error(ErrorKind::InvalidInput,
                "weights sum to " + std::to_string(total) + ", expected 1 within 1e-6");
  weights_ /= total;
}

bool DiscreteMeasure::is_uniform() const {
  const double w = 1.0 / static_cast<double>(size());
  return ((weights_.array() - w).abs() <= 1e-12).all();
}

LabeledDomain::LabeledDomain(DiscreteMeasure m, std::optional<Labels> l)
    : measure(std::move(m)), labels(std::move(l)) {
  if (labels) {
    if (labels->size() != measure.size())
      throw Error(ErrorKind::InvalidInput, "labels length does not match number of samples");
    if (std::any_of(labels->begin(), labels->end(), [](int y) { return y < 0; }))
      throw Error(ErrorKind::InvalidInput, "class ids must be nonnegative");
  }
}

DiscreteMeasure uniform_measure(const DataMatrix& points) {
  const auto n = static_cast<Eigen::Index>(points.rows());
  return DiscreteMeasure(points, Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

CostMatrix cost_matrix(const DataMatrix& xs, const DataMatrix& xt, double p) {
  if (xs.cols() != xt.cols())
    throw Error(ErrorKind::ShapeError, "cost_matrix: feature dimensions differ (" +
                                           std::to_string(xs.cols()) + " vs " +
                                           std::to_string(xt.cols()) + ")");
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidInput, "cost exponent p must be >= 1");
  CostMatrix c;
  c.p = p;
  kernels::parallel::pairwise_cost(xs.values(), xt.values(), p, c.values);
  return c;
}

std::vector<LabeledDomain> standardize(const std::vector<LabeledDomain>& domains) {
  if (domains.empty()) return {};
  const auto d = static_cast<Eigen::Index>(domains.front().dim());
  for (const auto& dom : domains)
    if (static_cast<Eigen::Index>(dom.dim()) != d)
      throw Error(ErrorKind::ShapeError, "standardize: domains have different feature dimensions");

  Vector mean = Vector::Zero(d);
  double total = 0.0;
  for (const auto& dom : domains) {
    mean += dom.measure.points().values().colwise().sum().transpose();
    total += static_cast<double>(dom.size());
  }
  mean /= total;

  Vector var = Vector::Zero(d);
  for (const auto& dom : domains)
    var += (dom.measure.points().values().rowwise() - mean.transpose())
               .array()
               .square()
               .colwise()
               .sum()
               .transpose()
               .matrix();
  var /= total;

  std::vector<LabeledDomain> out;
  out.reserve(domains.size());
  for (const auto& dom : domains) {
    RowMatrix x = dom.measure.points().values();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt(var[c]);
      if (!(sd > 1e-12 * std::max(1.0, std::abs(mean[c])))) continue;
      x.col(c) = (x.col(c).array() - mean[c]) / sd;
    }
    out.emplace_back(DiscreteMeasure(DataMatrix(std::move(x)), dom.measure.weights()), dom.labels);
  }
  return out;
}

int count_classes(std::span<const LabeledDomain> domains) {
  int n = 0;
  for (const auto& dom : domains)
    if (dom.labels)
      for (int y : *dom.labels) n = std::max(n, y + 1);
  return n;
}

}  // namespace seot
