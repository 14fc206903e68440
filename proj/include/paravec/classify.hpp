#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "paravec/matrix.hpp"

namespace paravec {

struct FeatureSet {
  Matrix<double> x;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  /// 1 + the largest label.
  std::size_t classes() const;
};

/// Row-wise concatenation [a | b]. An empty (0-column or 0-row) operand
/// contributes nothing.
Matrix<double> combine_features(const Matrix<double>& a, const Matrix<double>& b);
Matrix<double> to_double(const Matrix<float>& m);

/// Throws kInvalidArgument on shape mismatch, out-of-range labels or
/// non-finite entries.
void validate(const FeatureSet& features);

struct LinearClassifier {
  Matrix<double> weights;  // C x d
  std::vector<double> bias;
  bool trained = false;
};

struct MLPClassifier {
  Matrix<double> hidden_weights;  // H x d
  std::vector<double> hidden_bias;
  Matrix<double> output_weights;  // C x H
  std::vector<double> output_bias;
  bool trained = false;
};

struct LogRegOptions {
  double l2 = 1e-4;
  int epochs = 100;
  double lr = 0.1;
  std::uint64_t seed = 1;
  /// Gradient descent on the full mean loss instead of per-example SGD.
  bool full_batch = false;
  /// When set, keep the parameters of the epoch with the lowest error here.
  const FeatureSet* validation = nullptr;
  /// Receives the regularized training loss after every epoch.
  std::vector<double>* loss_trace = nullptr;
};

struct MlpOptions {
  int hidden = 50;
  int epochs = 100;
  double lr = 0.1;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  const FeatureSet* validation = nullptr;
};

/// Multinomial logistic regression by SGD on cross-entropy + (l2/2)|W|^2.
/// Throws kSingleClass when every label is the same.
LinearClassifier train_logreg(const FeatureSet& features, const LogRegOptions& options = {});

/// tanh hidden layer, softmax output. Hidden weights start uniform on
/// +-1/sqrt(d), output weights on +-1/sqrt(hidden).
MLPClassifier train_mlp(const FeatureSet& features, const MlpOptions& options = {});

/// Mean cross-entropy plus the L2 term, and its gradient laid out as a
/// classifier of the same shape.
double loss(const LinearClassifier& c, const FeatureSet& f, double l2);
LinearClassifier loss_gradient(const LinearClassifier& c, const FeatureSet& f, double l2,
                               double* loss_out = nullptr);
double loss(const MLPClassifier& c, const FeatureSet& f, double l2);
MLPClassifier loss_gradient(const MLPClassifier& c, const FeatureSet& f, double l2,
                            double* loss_out = nullptr);

/// Argmax class; ties go to the lower index.
int predict(const LinearClassifier& c, std::span<const double> x);
int predict(const MLPClassifier& c, std::span<const double> x);

/// Fraction misclassified.
double evaluate(const LinearClassifier& c, const FeatureSet& f);
double evaluate(const MLPClassifier& c, const FeatureSet& f);
double accuracy(const LinearClassifier& c, const FeatureSet& f);
double accuracy(const MLPClassifier& c, const FeatureSet& f);

enum class SentimentTask { kFineGrained, kCoarse };

/// Maps a 0..1 sentiment score to a class: five bins split at 0.2/0.4/0.6/0.8,
/// or two classes split at 0.5 with the neutral band (0.4, 0.6] dropped.
std::optional<int> bin_sentiment(double score, SentimentTask task);

}  // namespace paravec
