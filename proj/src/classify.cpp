#include "seot/classify.hpp"

#include "seot/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace seot {
namespace {

int infer_classes(const Labels& a, const Labels& b = {}) {
  int n = 0;
  for (int y : a) n = std::max(n, y + 1);
  for (int y : b) n = std::max(n, y + 1);
  return n;
}

}  // namespace

Labels knn_predict(const EmbeddedDataset& data, std::size_t k_neighbors) {
  const auto n_train = static_cast<std::size_t>(data.train_rows.rows());
  if (n_train == 0) throw Error(ErrorKind::InvalidInput, "knn_predict: empty training set");
  if (data.train_labels.size() != n_train)
    throw Error(ErrorKind::ShapeError, "knn_predict: label count differs from training rows");
  if (data.test_rows.rows() > 0 && data.test_rows.cols() != data.train_rows.cols())
    throw Error(ErrorKind::ShapeError, "knn_predict: train and test dimensions differ");
  if (k_neighbors < 1 || k_neighbors > n_train)
    throw Error(ErrorKind::InvalidInput, "knn_predict: k_neighbors must be in [1, n_train]");

  const int n_classes = infer_classes(data.train_labels);
  const auto n_test = static_cast<std::int64_t>(data.test_rows.rows());
  Labels out(static_cast<std::size_t>(n_test));

#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < n_test; ++t) {
    std::vector<std::pair<double, std::size_t>> dist(n_train);
    for (std::size_t i = 0; i < n_train; ++i)
      dist[i] = {(data.train_rows.row(static_cast<Eigen::Index>(i)) - data.test_rows.row(t)).squaredNorm(), i};
    const auto kth = dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors);
    std::partial_sort(dist.begin(), kth, dist.end());  // pair order breaks ties by index
    std::vector<std::size_t> votes(static_cast<std::size_t>(n_classes), 0);
    for (auto it = dist.begin(); it != kth; ++it) ++votes[static_cast<std::size_t>(data.train_labels[it->second])];
    out[static_cast<std::size_t>(t)] =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

double softmax_loss(const Eigen::MatrixXd& x, const Labels& y, const Eigen::MatrixXd& weights,
                    const Vector& bias, double l2, Eigen::MatrixXd* grad_w, Vector* grad_b) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd logits = (x * weights.transpose()).rowwise() + bias.transpose();
  double loss = 0.0;
  Eigen::MatrixXd prob(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - hi).exp().matrix();
    const double z = e.sum();
    prob.row(i) = e / z;
    loss -= logits(i, y[static_cast<std::size_t>(i)]) - hi - std::log(z);
  }
  loss = loss / static_cast<double>(n) + 0.5 * l2 * weights.squaredNorm();
  if (grad_w || grad_b) {
    Eigen::MatrixXd delta = prob;
    for (Eigen::Index i = 0; i < n; ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= static_cast<double>(n);
    if (grad_w) *grad_w = delta.transpose() * x + l2 * weights;
    if (grad_b) *grad_b = delta.colwise().sum().transpose();
  }
  return loss;
}

Labels SoftmaxModel::predict(const Eigen::MatrixXd& rows) const {
  Labels out(static_cast<std::size_t>(rows.rows()));
  const Eigen::MatrixXd logits = (rows * weights.transpose()).rowwise() + bias.transpose();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, arg)) arg = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

SoftmaxModel softmax_train(const EmbeddedDataset& data, double l2, double lr, int epochs,
                           std::uint64_t /*seed*/, int n_classes) {
  if (epochs < 1) throw Error(ErrorKind::InvalidInput, "softmax_train: epochs must be >= 1");
  if (!(l2 >= 0.0)) throw Error(ErrorKind::InvalidInput, "softmax_train: l2 must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorKind::InvalidInput, "softmax_train: lr must be > 0");
  if (data.train_rows.rows() == 0) throw Error(ErrorKind::InvalidInput, "softmax_train: empty training set");
  if (static_cast<std::size_t>(data.train_rows.rows()) != data.train_labels.size())
    throw Error(ErrorKind::ShapeError, "softmax_train: label count differs from training rows");
  const int classes = std::max({n_classes, infer_classes(data.train_labels), 2});

  SoftmaxModel model;
  model.weights = Eigen::MatrixXd::Zero(classes, data.train_rows.cols());
  model.bias = Vector::Zero(classes);
  Eigen::MatrixXd gw;
  Vector gb;
  for (int e = 0; e < epochs; ++e) {
    const double loss = softmax_loss(data.train_rows, data.train_labels, model.weights, model.bias, l2, &gw, &gb);
    if (!std::isfinite(loss))
      throw Error(ErrorKind::NumericalError, "softmax loss is not finite at epoch " + std::to_string(e));
    model.loss_trace.push_back(loss);
    model.weights -= lr * gw;
    model.bias -= lr * gb;
  }
  model.final_loss = softmax_loss(data.train_rows, data.train_labels, model.weights, model.bias, l2);
  if (!std::isfinite(model.final_loss))
    throw Error(ErrorKind::NumericalError, "softmax loss is not finite after training");
  model.loss_trace.push_back(model.final_loss);
  return model;
}

EvalReport evaluate(const Labels& predictions, const Labels& truth, int n_classes) {
  if (predictions.size() != truth.size())
    throw Error(ErrorKind::ShapeError, "evaluate: predictions and truth lengths differ");
  if (truth.empty()) throw Error(ErrorKind::InvalidInput, "evaluate: nothing to evaluate");
  const auto classes = static_cast<std::size_t>(std::max(n_classes, infer_classes(predictions, truth)));

  EvalReport r;
  r.n_test = truth.size();
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predictions[i])];
    correct += predictions[i] == truth[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_test);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto total = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.per_class_accuracy.push_back(total ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(total)
                                         : std::numeric_limits<double>::quiet_NaN());
  }
  return r;
}

Labels fit_predict(const EmbeddedDataset& data, const ClassifierConfig& cfg, std::uint64_t seed,
                   int n_classes) {
  if (cfg.kind == ClassifierKind::Knn)
    return knn_predict(data, std::min<std::size_t>(cfg.k_neighbors, static_cast<std::size_t>(data.train_rows.rows())));
  return softmax_train(data, cfg.l2, cfg.lr, cfg.epochs, seed, n_classes).predict(data.test_rows);
}

EvalReport source_only_baseline(const std::vector<LabeledDomain>& sources, const LabeledDomain& target,
                                const ClassifierConfig& cfg, std::uint64_t seed) {
  if (sources.empty()) throw Error(ErrorKind::InvalidInput, "source_only_baseline: no sources");
  if (!target.labeled()) throw Error(ErrorKind::InvalidInput, "source_only_baseline: target labels required");
  std::vector<LabeledDomain> all = sources;
  all.push_back(target);
  const auto scaled = standardize(all);

  EmbeddedDataset data;
  Eigen::Index n_train = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!sources[i].labeled()) throw Error(ErrorKind::InvalidInput, "source_only_baseline: unlabeled source");
    n_train += static_cast<Eigen::Index>(sources[i].size());
  }
  data.train_rows.resize(n_train, static_cast<Eigen::Index>(target.dim()));
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& x = scaled[i].measure.points().values();
    data.train_rows.middleRows(offset, x.rows()) = x;
    offset += x.rows();
    data.train_labels.insert(data.train_labels.end(), sources[i].labels->begin(), sources[i].labels->end());
  }
  data.test_rows = scaled.back().measure.points().values();
  const int n_classes = count_classes(all);
  return evaluate(fit_predict(data, cfg, seed, n_classes), *target.labels, n_classes);
}

}  // namespace seot
