#include "paravec/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "paravec/error.hpp"
#include "paravec/simd/kernels.hpp"

namespace paravec {

std::size_t FeatureSet::classes() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

Matrix<double> combine_features(const Matrix<double>& a, const Matrix<double>& b) {
  if (b.cols() == 0 || b.rows() == 0) return a;
  if (a.cols() == 0 || a.rows() == 0) return b;
  if (a.rows() != b.rows()) throw Error(ErrorCode::kInvalidArgument, "row counts differ");
  Matrix<double> out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix<double> to_double(const Matrix<float>& m) { return m.cast<double>(); }

void validate(const FeatureSet& f) {
  if (f.x.rows() != f.labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature rows and labels differ in count");
  }
  for (int y : f.labels) {
    if (y < 0) throw Error(ErrorCode::kInvalidArgument, "labels must be nonnegative");
  }
  for (double v : f.x.flat()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite feature");
  }
}

namespace {

void require_two_classes(const FeatureSet& f) {
  validate(f);
  if (f.labels.empty() ||
      std::all_of(f.labels.begin(), f.labels.end(), [&](int y) { return y == f.labels[0]; })) {
    throw Error(ErrorCode::kSingleClass, "training labels contain a single class");
  }
}

// In-place softmax; returns log-sum-exp of the input.
double softmax(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
  return m + std::log(s);
}

int argmax(std::span<const double> z) {
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

void linear_scores(const LinearClassifier& c, std::span<const double> x, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = c.bias[k] + simd::dot(c.weights.row(k), x);
}

void mlp_forward(const MLPClassifier& c, std::span<const double> x, std::span<double> hidden,
                 std::span<double> out) {
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    hidden[j] = std::tanh(c.hidden_bias[j] + simd::dot(c.hidden_weights.row(j), x));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = c.output_bias[k] + simd::dot(c.output_weights.row(k), std::span<const double>(hidden));
  }
}

double sum_squares(const Matrix<double>& m) {
  return simd::dot(m.flat(), m.flat());
}

// Adds the per-example gradient (scaled by `scale`) of a linear model into g.
double linear_example(const LinearClassifier& c, std::span<const double> x, int y,
                      std::vector<double>& z, LinearClassifier& g, double scale) {
  linear_scores(c, x, z);
  const double target_score = z[static_cast<std::size_t>(y)];
  const double loss = softmax(z) - target_score;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double d = (z[k] - (static_cast<int>(k) == y ? 1.0 : 0.0)) * scale;
    simd::axpy(d, x, g.weights.row(k));
    g.bias[k] += d;
  }
  return loss;
}

template <typename Classifier>
double error_rate(const Classifier& c, const FeatureSet& f) {
  if (!c.trained) throw Error(ErrorCode::kInvalidArgument, "classifier is not trained");
  if (f.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (predict(c, f.x.row(i)) != f.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(f.size());
}

}  // namespace

double loss(const LinearClassifier& c, const FeatureSet& f, double l2) {
  double value = 0.0;
  loss_gradient(c, f, l2, &value);
  return value;
}

LinearClassifier loss_gradient(const LinearClassifier& c, const FeatureSet& f, double l2,
                               double* loss_out) {
  LinearClassifier g{Matrix<double>(c.weights.rows(), c.weights.cols()),
                     std::vector<double>(c.bias.size(), 0.0), false};
  std::vector<double> z(c.bias.size());
  const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(1, f.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    total += linear_example(c, f.x.row(i), f.labels[i], z, g, inv_n);
  }
  simd::axpy(l2, c.weights.flat(), g.weights.flat());
  if (loss_out != nullptr) *loss_out = total * inv_n + 0.5 * l2 * sum_squares(c.weights);
  return g;
}

LinearClassifier train_logreg(const FeatureSet& f, const LogRegOptions& options) {
  require_two_classes(f);
  if (options.epochs < 0 || !(options.lr > 0) || options.l2 < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid logistic regression options");
  }
  const std::size_t classes = std::max<std::size_t>(2, f.classes());
  const std::size_t d = f.x.cols();
  LinearClassifier c{Matrix<double>(classes, d), std::vector<double>(classes, 0.0), true};
  LinearClassifier best = c;
  double best_err = 2.0;

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> z(classes);
  LinearClassifier g{Matrix<double>(classes, d), std::vector<double>(classes, 0.0), false};

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.full_batch) {
      const LinearClassifier grad = loss_gradient(c, f, options.l2);
      simd::axpy(-options.lr, grad.weights.flat(), c.weights.flat());
      for (std::size_t k = 0; k < classes; ++k) c.bias[k] -= options.lr * grad.bias[k];
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        std::fill(g.weights.flat().begin(), g.weights.flat().end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
        linear_example(c, f.x.row(i), f.labels[i], z, g, 1.0);
        simd::axpy(options.l2, c.weights.flat(), g.weights.flat());
        simd::axpy(-options.lr, g.weights.flat(), c.weights.flat());
        for (std::size_t k = 0; k < classes; ++k) c.bias[k] -= options.lr * g.bias[k];
      }
    }
    if (options.loss_trace != nullptr) options.loss_trace->push_back(loss(c, f, options.l2));
    if (options.validation != nullptr) {
      const double err = evaluate(c, *options.validation);
      if (err < best_err) {
        best_err = err;
        best = c;
      }
    }
  }
  return options.validation != nullptr && options.epochs > 0 ? best : c;
}

double loss(const MLPClassifier& c, const FeatureSet& f, double l2) {
  double value = 0.0;
  loss_gradient(c, f, l2, &value);
  return value;
}

namespace {

double mlp_example(const MLPClassifier& c, std::span<const double> x, int y,
                   std::vector<double>& hidden, std::vector<double>& z,
                   std::vector<double>& delta_hidden, MLPClassifier& g, double scale) {
  mlp_forward(c, x, hidden, z);
  const double target_score = z[static_cast<std::size_t>(y)];
  const double loss = softmax(z) - target_score;
  std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double d = (z[k] - (static_cast<int>(k) == y ? 1.0 : 0.0)) * scale;
    simd::axpy(d, std::span<const double>(hidden), g.output_weights.row(k));
    g.output_bias[k] += d;
    simd::axpy(d, c.output_weights.row(k), std::span<double>(delta_hidden));
  }
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    const double d = delta_hidden[j] * (1.0 - hidden[j] * hidden[j]);
    simd::axpy(d, x, g.hidden_weights.row(j));
    g.hidden_bias[j] += d;
  }
  return loss;
}

MLPClassifier zero_like(const MLPClassifier& c) {
  return {Matrix<double>(c.hidden_weights.rows(), c.hidden_weights.cols()),
          std::vector<double>(c.hidden_bias.size(), 0.0),
          Matrix<double>(c.output_weights.rows(), c.output_weights.cols()),
          std::vector<double>(c.output_bias.size(), 0.0), false};
}

}  // namespace

MLPClassifier loss_gradient(const MLPClassifier& c, const FeatureSet& f, double l2,
                            double* loss_out) {
  MLPClassifier g = zero_like(c);
  std::vector<double> hidden(c.hidden_bias.size()), z(c.output_bias.size()),
      delta(c.hidden_bias.size());
  const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(1, f.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    total += mlp_example(c, f.x.row(i), f.labels[i], hidden, z, delta, g, inv_n);
  }
  simd::axpy(l2, c.hidden_weights.flat(), g.hidden_weights.flat());
  simd::axpy(l2, c.output_weights.flat(), g.output_weights.flat());
  if (loss_out != nullptr) {
    *loss_out = total * inv_n +
                0.5 * l2 * (sum_squares(c.hidden_weights) + sum_squares(c.output_weights));
  }
  return g;
}

MLPClassifier train_mlp(const FeatureSet& f, const MlpOptions& options) {
  require_two_classes(f);
  if (options.hidden < 1 || options.epochs < 0 || !(options.lr > 0) || options.l2 < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid MLP options");
  }
  const std::size_t classes = std::max<std::size_t>(2, f.classes());
  const std::size_t d = f.x.cols();
  const auto h = static_cast<std::size_t>(options.hidden);

  std::mt19937_64 rng(options.seed);
  MLPClassifier c{Matrix<double>(h, d), std::vector<double>(h, 0.0), Matrix<double>(classes, h),
                  std::vector<double>(classes, 0.0), true};
  {
    std::uniform_real_distribution<double> in(-1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1))),
                                              1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1))));
    for (double& v : c.hidden_weights.flat()) v = in(rng);
    std::uniform_real_distribution<double> out(-1.0 / std::sqrt(static_cast<double>(h)),
                                               1.0 / std::sqrt(static_cast<double>(h)));
    for (double& v : c.output_weights.flat()) v = out(rng);
  }

  MLPClassifier best = c;
  double best_err = 2.0;
  MLPClassifier g = zero_like(c);
  std::vector<double> hidden(h), z(classes), delta(h);
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto clear = [](MLPClassifier& m) {
    std::fill(m.hidden_weights.flat().begin(), m.hidden_weights.flat().end(), 0.0);
    std::fill(m.output_weights.flat().begin(), m.output_weights.flat().end(), 0.0);
    std::fill(m.hidden_bias.begin(), m.hidden_bias.end(), 0.0);
    std::fill(m.output_bias.begin(), m.output_bias.end(), 0.0);
  };

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      clear(g);
      mlp_example(c, f.x.row(i), f.labels[i], hidden, z, delta, g, 1.0);
      if (options.l2 > 0) {
        simd::axpy(options.l2, c.hidden_weights.flat(), g.hidden_weights.flat());
        simd::axpy(options.l2, c.output_weights.flat(), g.output_weights.flat());
      }
      simd::axpy(-options.lr, g.hidden_weights.flat(), c.hidden_weights.flat());
      simd::axpy(-options.lr, g.output_weights.flat(), c.output_weights.flat());
      simd::axpy(-options.lr, g.hidden_bias, std::span<double>(c.hidden_bias));
      simd::axpy(-options.lr, g.output_bias, std::span<double>(c.output_bias));
    }
    if (options.validation != nullptr) {
      const double err = evaluate(c, *options.validation);
      if (err < best_err) {
        best_err = err;
        best = c;
      }
    }
  }
  return options.validation != nullptr && options.epochs > 0 ? best : c;
}

int predict(const LinearClassifier& c, std::span<const double> x) {
  std::vector<double> z(c.bias.size());
  linear_scores(c, x, z);
  return argmax(z);
}

int predict(const MLPClassifier& c, std::span<const double> x) {
  std::vector<double> hidden(c.hidden_bias.size()), z(c.output_bias.size());
  mlp_forward(c, x, hidden, z);
  return argmax(z);
}

double evaluate(const LinearClassifier& c, const FeatureSet& f) { return error_rate(c, f); }
double evaluate(const MLPClassifier& c, const FeatureSet& f) { return error_rate(c, f); }
double accuracy(const LinearClassifier& c, const FeatureSet& f) { return 1.0 - evaluate(c, f); }
double accuracy(const MLPClassifier& c, const FeatureSet& f) { return 1.0 - evaluate(c, f); }

std::optional<int> bin_sentiment(double score, SentimentTask task) {
  if (!(score >= 0.0 && score <= 1.0)) return std::nullopt;
  if (task == SentimentTask::kCoarse) {
    if (score <= 0.4) return 0;
    if (score > 0.6) return 1;
    return std::nullopt;
  }
  if (score <= 0.2) return 0;
  if (score <= 0.4) return 1;
  if (score <= 0.6) return 2;
  if (score <= 0.8) return 3;
  return 4;
}

}  // namespace paravec
