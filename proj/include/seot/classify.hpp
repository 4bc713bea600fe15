#pragma once

#include "seot/measures.hpp"

#include <cstdint>
#include <vector>

namespace seot {

struct EmbeddedDataset {
  Eigen::MatrixXd train_rows;
  Labels train_labels;
  Eigen::MatrixXd test_rows;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes absent from truth
  std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
  std::size_t n_test = 0;
};

/// Majority vote of the k nearest training rows (Euclidean). Distance ties go
/// to the smaller training index, vote ties to the smaller class id.
Labels knn_predict(const EmbeddedDataset& data, std::size_t k_neighbors);

/// Multinomial logistic regression, weights n_classes x dim.
struct SoftmaxModel {
  Eigen::MatrixXd weights;
  Vector bias;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // loss before each epoch, then the final loss

  Labels predict(const Eigen::MatrixXd& rows) const;
};

/// Mean cross-entropy + (l2 / 2) ||W||^2 and its gradient. Exposed for the
/// finite-difference check.
double softmax_loss(const Eigen::MatrixXd& x, const Labels& y, const Eigen::MatrixXd& weights,
                    const Vector& bias, double l2, Eigen::MatrixXd* grad_w = nullptr,
                    Vector* grad_b = nullptr);

/// Full-batch gradient descent from zero weights. `seed` is accepted for
/// interface stability; zero initialization makes training deterministic.
SoftmaxModel softmax_train(const EmbeddedDataset& data, double l2, double lr, int epochs,
                           std::uint64_t seed = 0, int n_classes = 0);

EvalReport evaluate(const Labels& predictions, const Labels& truth, int n_classes = 0);

enum class ClassifierKind { Knn, Softmax };

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::Knn;
  std::size_t k_neighbors = 5;
  double l2 = 1e-4;
  double lr = 0.1;
  int epochs = 500;
};

/// Fits the configured classifier on the training rows and labels the test rows.
Labels fit_predict(const EmbeddedDataset& data, const ClassifierConfig& cfg, std::uint64_t seed,
                   int n_classes);

/// Trains on pooled, standardized raw source features and evaluates on the
/// target; no adaptation. The target must be labeled.
EvalReport source_only_baseline(const std::vector<LabeledDomain>& sources, const LabeledDomain& target,
                                const ClassifierConfig& cfg, std::uint64_t seed = 0);

}  // namespace seot
