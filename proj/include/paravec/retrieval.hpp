#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "paravec/corpus.hpp"
#include "paravec/inference.hpp"
#include "paravec/matrix.hpp"
#include "paravec/model.hpp"
#include "paravec/trainer.hpp"

namespace paravec {

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  std::vector<Triplet> train;
  std::vector<Triplet> validation;
  std::vector<Triplet> test;

  std::size_t size() const noexcept { return train.size() + validation.size() + test.size(); }
};

/// Partition sizes for `total` triplets: floor(80%), floor(10%), remainder.
struct SplitSizes {
  std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t total);

/// Splits an ordered list into train/validation/test by split_sizes().
TripletSet split_triplets(std::span<const Triplet> ordered);

/// Three tab-separated document indices per line; train, validation and test
/// partitions are written in that order.
std::vector<Triplet> read_triplets(std::istream& in);
void write_triplets(std::ostream& out, const TripletSet& set);

/// Indices sorted by column.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

/// TF-IDF with raw term counts, idf = ln((1 + N) / (1 + df)) + 1, and L2
/// normalized rows. Bigram mode adds contiguous token pairs to the unigrams.
class TfidfModel {
 public:
  /// Separator inside a bigram term. Tokenization never yields control
  /// characters, so it cannot collide with a token.
  static constexpr char kBigramSeparator = '\x1f';

  static TfidfModel fit(std::span<const Document> docs, int ngram);

  SparseVector transform(const Document& doc) const;
  std::vector<SparseVector> transform(std::span<const Document> docs) const;

  int ngram() const noexcept { return ngram_; }
  std::size_t dimension() const noexcept { return idf_.size(); }
  double idf(const std::string& term) const;

 private:
  std::vector<std::string> terms(const Document& doc) const;

  int ngram_ = 1;
  std::unordered_map<std::string, std::uint32_t> columns_;
  std::vector<double> idf_;
};

/// Fit and transform on the same documents.
std::vector<SparseVector> tfidf_features(std::span<const Document> docs, int ngram);

/// Unweighted mean of the in-vocabulary word vectors; zero for documents
/// with no known word.
Matrix<double> vector_average_features(const PVModel& model, std::span<const Document> docs);

enum class Distance { kCosine, kEuclidean };

double distance(std::span<const double> a, std::span<const double> b, Distance metric);
double distance(const SparseVector& a, const SparseVector& b, Distance metric);

/// Fraction of triplets with d(anchor, positive) >= d(anchor, negative);
/// ties count as errors.
double triplet_error(const Matrix<double>& features, std::span<const Triplet> triplets,
                     Distance metric = Distance::kCosine);
double triplet_error(std::span<const SparseVector> features, std::span<const Triplet> triplets,
                     Distance metric = Distance::kCosine);

/// Learned projection x -> A x for sparse features. Stored transposed
/// (d x proj_dim) so that sparse inputs touch whole rows.
struct LinearMap {
  Matrix<double> weights_t;
  double lambda = 0.0;
  double validation_error = 1.0;

  std::size_t input_dim() const noexcept { return weights_t.rows(); }
  std::size_t proj_dim() const noexcept { return weights_t.cols(); }
  static LinearMap identity(std::size_t dim);
};

std::vector<double> project(const LinearMap& map, const SparseVector& x);
Matrix<double> project(const LinearMap& map, std::span<const SparseVector> xs);

double triplet_error(const LinearMap& map, std::span<const SparseVector> features,
                     std::span<const Triplet> triplets, Distance metric = Distance::kCosine);

/// Mean over triplets of |A(xa - xp)|^2 - lambda |A(xa - xn)|^2, and its
/// gradient with respect to the stored (transposed) weights.
double projection_loss(const LinearMap& map, std::span<const SparseVector> features,
                       std::span<const Triplet> triplets, double lambda,
                       Matrix<double>* gradient_t = nullptr);

struct ProjectionOptions {
  int epochs = 5;
  double lr = 0.01;
  std::uint64_t seed = 1;
};

/// SGD on projection_loss for one (proj_dim, lambda). The objective is
/// homogeneous in A, so the weights are rescaled to a fixed Frobenius norm
/// as they go; this leaves the trajectory's direction, and every cosine
/// distance, unchanged. lambda may be zero so that sweeps can include the
/// unweighted objective. Throws kDegenerate on a non-finite loss.
LinearMap fit_projection(std::span<const SparseVector> features,
                         std::span<const Triplet> train, std::size_t proj_dim, double lambda,
                         const ProjectionOptions& options = {});

struct WeightedBigramOptions {
  std::vector<std::size_t> proj_dims{128};
  std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0};
  ProjectionOptions sgd;
};

/// Sweeps (proj_dim, lambda), keeps the map with the lowest validation
/// triplet error (first in sweep order on ties).
LinearMap learn_weighted_bigram(std::span<const SparseVector> features,
                                std::span<const Triplet> train,
                                std::span<const Triplet> validation,
                                const WeightedBigramOptions& options = {});

struct SynthOptions {
  int n_topics = 2;
  int docs_per_topic = 50;
  int vocab_per_topic = 30;
  /// Size of the pool shared by all topics; negative means vocab_per_topic.
  int shared_vocab = -1;
  int doc_len = 20;
  double noise = 0.2;
  /// Probability that a token repeats a uniformly chosen earlier token of
  /// the same document (Polya-urn burstiness). 0 gives i.i.d. tokens.
  double burst = 0.0;
  std::size_t n_triplets = 1000;
  std::uint64_t seed = 1;
};

enum class Partition : std::uint8_t { kTrain, kValidation, kTest };

struct SynthData {
  std::vector<Document> docs;
  std::vector<int> topics;
  std::vector<Partition> partition;  // per document
  TripletSet triplets;
};

/// Topic-pool documents with disjoint train/validation/test document pools;
/// each triplet pairs two same-topic documents of one partition with a
/// document of another topic from the same partition.
SynthData synth_triplets(const SynthOptions& options);

enum class FeatureMethod {
  kTfidfUnigram,
  kTfidfBigram,
  kWeightedBigram,
  kVectorAverage,
  kParagraphVector,
};

FeatureMethod parse_feature_method(const std::string& text);
const char* to_string(FeatureMethod method);

struct TripletEvalOptions {
  Distance metric = Distance::kCosine;
  ModelConfig dm{};
  ModelConfig dbow{};
  ModelConfig word{};
  TrainSchedule train{};
  InferenceSchedule infer{};
  WeightedBigramOptions weighted{};
  std::uint64_t min_count = 1;
  int workers = 1;
};

struct TripletReport {
  double train = 0.0;
  double validation = 0.0;
  double test = 0.0;
};

/// Documents referenced by training triplets, ascending.
std::vector<std::size_t> training_documents(const TripletSet& set, std::size_t n_docs);

/// Fits the method on training-partition documents only, then scores every
/// partition.
TripletReport evaluate_triplets(FeatureMethod method, std::span<const Document> docs,
                                const TripletSet& set, const TripletEvalOptions& options);

}  // namespace paravec
