#include "paravec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "paravec/classify.hpp"
#include "paravec/error.hpp"
#include "paravec/simd/kernels.hpp"

namespace paravec {

SplitSizes split_sizes(std::size_t total) {
  const std::size_t train = total * 8 / 10;
  const std::size_t validation = total / 10;
  return {train, validation, total - train - validation};
}

TripletSet split_triplets(std::span<const Triplet> ordered) {
  const SplitSizes s = split_sizes(ordered.size());
  TripletSet set;
  set.train.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(s.train));
  set.validation.assign(ordered.begin() + static_cast<std::ptrdiff_t>(s.train),
                        ordered.begin() + static_cast<std::ptrdiff_t>(s.train + s.validation));
  set.test.assign(ordered.begin() + static_cast<std::ptrdiff_t>(s.train + s.validation),
                  ordered.end());
  return set;
}

std::vector<Triplet> read_triplets(std::istream& in) {
  std::vector<Triplet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long long a = -1, p = -1, n = -1;
    std::string rest;
    if (!(fields >> a >> p >> n) || (fields >> rest) || a < 0 || p < 0 || n < 0) {
      throw Error(ErrorCode::kInvalidArgument, "bad triplet on line " + std::to_string(line_no));
    }
    Triplet t{static_cast<std::size_t>(a), static_cast<std::size_t>(p), static_cast<std::size_t>(n)};
    if (t.anchor == t.positive || t.anchor == t.negative || t.positive == t.negative) {
      throw Error(ErrorCode::kInvalidArgument,
                  "triplet indices must be distinct on line " + std::to_string(line_no));
    }
    out.push_back(t);
  }
  return out;
}

void write_triplets(std::ostream& out, const TripletSet& set) {
  for (const auto* part : {&set.train, &set.validation, &set.test}) {
    for (const Triplet& t : *part) out << t.anchor << '\t' << t.positive << '\t' << t.negative << '\n';
  }
}

// ---------------------------------------------------------------------------
// TF-IDF

std::vector<std::string> TfidfModel::terms(const Document& doc) const {
  std::vector<std::string> out(doc.begin(), doc.end());
  if (ngram_ == 2) {
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
      out.push_back(doc[i] + kBigramSeparator + doc[i + 1]);
    }
  }
  return out;
}

TfidfModel TfidfModel::fit(std::span<const Document> docs, int ngram) {
  if (ngram != 1 && ngram != 2) throw Error(ErrorCode::kInvalidArgument, "ngram must be 1 or 2");
  if (docs.empty()) throw Error(ErrorCode::kInvalidArgument, "tf-idf needs at least one document");
  TfidfModel model;
  model.ngram_ = ngram;
  std::map<std::string, std::size_t> df;
  for (const Document& doc : docs) {
    std::vector<std::string> t = model.terms(doc);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    for (auto& term : t) ++df[term];
  }
  const auto n = static_cast<double>(docs.size());
  model.idf_.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.columns_.emplace(term, static_cast<std::uint32_t>(model.idf_.size()));
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

double TfidfModel::idf(const std::string& term) const {
  auto it = columns_.find(term);
  return it == columns_.end() ? 0.0 : idf_[it->second];
}

SparseVector TfidfModel::transform(const Document& doc) const {
  std::map<std::uint32_t, double> counts;
  for (const std::string& term : terms(doc)) {
    auto it = columns_.find(term);
    if (it != columns_.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  double norm2 = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * idf_[col];
    v.index.push_back(col);
    v.value.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& w : v.value) w *= inv;
  }
  return v;
}

std::vector<SparseVector> TfidfModel::transform(std::span<const Document> docs) const {
  std::vector<SparseVector> out;
  out.reserve(docs.size());
  for (const Document& d : docs) out.push_back(transform(d));
  return out;
}

std::vector<SparseVector> tfidf_features(std::span<const Document> docs, int ngram) {
  return TfidfModel::fit(docs, ngram).transform(docs);
}

Matrix<double> vector_average_features(const PVModel& model, std::span<const Document> docs) {
  const std::size_t q = model.params.words.cols();
  Matrix<double> out(docs.size(), q);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::vector<WordId> ids = encode_document(docs[i], model.vocab);
    if (ids.empty()) continue;
    auto row = out.row(i);
    for (WordId w : ids) simd::axpy(1.0, model.params.words.row(static_cast<std::size_t>(w)), row);
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& v : row) v *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() && j < b.index.size()) {
    if (a.index[i] < b.index[j]) {
      ++i;
    } else if (a.index[i] > b.index[j]) {
      ++j;
    } else {
      s += a.value[i++] * b.value[j++];
    }
  }
  return s;
}

double from_products(double ab, double aa, double bb, Distance metric) {
  if (metric == Distance::kEuclidean) return std::sqrt(std::max(0.0, aa + bb - 2.0 * ab));
  if (aa <= 0.0 || bb <= 0.0) return 1.0;
  return 1.0 - ab / std::sqrt(aa * bb);
}

// a - b over the union of supports.
void sparse_diff(const SparseVector& a, const SparseVector& b, SparseVector& out) {
  out.index.clear();
  out.value.clear();
  std::size_t i = 0, j = 0;
  while (i < a.index.size() || j < b.index.size()) {
    if (j == b.index.size() || (i < a.index.size() && a.index[i] < b.index[j])) {
      out.index.push_back(a.index[i]);
      out.value.push_back(a.value[i++]);
    } else if (i == a.index.size() || b.index[j] < a.index[i]) {
      out.index.push_back(b.index[j]);
      out.value.push_back(-b.value[j++]);
    } else {
      out.index.push_back(a.index[i]);
      out.value.push_back(a.value[i++] - b.value[j++]);
    }
  }
}

template <typename DistanceFn>
double count_errors(std::span<const Triplet> triplets, std::size_t n, DistanceFn dist) {
  if (triplets.empty()) return 0.0;
  std::size_t errors = 0;
  for (const Triplet& t : triplets) {
    if (t.anchor >= n || t.positive >= n || t.negative >= n) {
      throw Error(ErrorCode::kInvalidArgument, "triplet references a missing document");
    }
    if (dist(t.anchor, t.positive) >= dist(t.anchor, t.negative)) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(triplets.size());
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b, Distance metric) {
  return from_products(simd::dot(a, b), simd::dot(a, a), simd::dot(b, b), metric);
}

double distance(const SparseVector& a, const SparseVector& b, Distance metric) {
  return from_products(sparse_dot(a, b), sparse_dot(a, a), sparse_dot(b, b), metric);
}

double triplet_error(const Matrix<double>& features, std::span<const Triplet> triplets,
                     Distance metric) {
  return count_errors(triplets, features.rows(), [&](std::size_t i, std::size_t j) {
    return distance(features.row(i), features.row(j), metric);
  });
}

double triplet_error(std::span<const SparseVector> features, std::span<const Triplet> triplets,
                     Distance metric) {
  return count_errors(triplets, features.size(), [&](std::size_t i, std::size_t j) {
    return distance(features[i], features[j], metric);
  });
}

// ---------------------------------------------------------------------------
// Weighted bag-of-bigrams

LinearMap LinearMap::identity(std::size_t dim) {
  LinearMap m;
  m.weights_t = Matrix<double>(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) m.weights_t(i, i) = 1.0;
  return m;
}

namespace {

void project_into(const LinearMap& map, const SparseVector& x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < x.index.size(); ++k) {
    if (x.index[k] < map.input_dim()) {
      simd::axpy(x.value[k], std::span<const double>(map.weights_t.row(x.index[k])), out);
    }
  }
}

void rank_one_update(Matrix<double>& target_t, const SparseVector& u, std::span<const double> au,
                     double coeff) {
  for (std::size_t k = 0; k < u.index.size(); ++k) {
    if (u.index[k] < target_t.rows()) simd::axpy(coeff * u.value[k], au, target_t.row(u.index[k]));
  }
}

double frobenius(const Matrix<double>& m) { return std::sqrt(simd::dot(m.flat(), m.flat())); }

}  // namespace

std::vector<double> project(const LinearMap& map, const SparseVector& x) {
  std::vector<double> out(map.proj_dim());
  project_into(map, x, out);
  return out;
}

Matrix<double> project(const LinearMap& map, std::span<const SparseVector> xs) {
  Matrix<double> out(xs.size(), map.proj_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) project_into(map, xs[i], out.row(i));
  return out;
}

double triplet_error(const LinearMap& map, std::span<const SparseVector> features,
                     std::span<const Triplet> triplets, Distance metric) {
  return triplet_error(project(map, features), triplets, metric);
}

double projection_loss(const LinearMap& map, std::span<const SparseVector> features,
                       std::span<const Triplet> triplets, double lambda,
                       Matrix<double>* gradient_t) {
  if (gradient_t != nullptr) *gradient_t = Matrix<double>(map.input_dim(), map.proj_dim());
  if (triplets.empty()) return 0.0;
  SparseVector u, v;
  std::vector<double> au(map.proj_dim()), av(map.proj_dim());
  const double inv = 1.0 / static_cast<double>(triplets.size());
  double total = 0.0;
  for (const Triplet& t : triplets) {
    sparse_diff(features[t.anchor], features[t.positive], u);
    sparse_diff(features[t.anchor], features[t.negative], v);
    project_into(map, u, au);
    project_into(map, v, av);
    const std::span<const double> cau(au), cav(av);
    total += simd::dot(cau, cau) - lambda * simd::dot(cav, cav);
    if (gradient_t != nullptr) {
      rank_one_update(*gradient_t, u, au, 2.0 * inv);
      rank_one_update(*gradient_t, v, av, -2.0 * lambda * inv);
    }
  }
  return total * inv;
}

LinearMap fit_projection(std::span<const SparseVector> features, std::span<const Triplet> train,
                         std::size_t proj_dim, double lambda, const ProjectionOptions& options) {
  if (proj_dim == 0 || !(lambda >= 0) || !(options.lr > 0) || options.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid projection options");
  }
  std::size_t dim = 0;
  for (const SparseVector& x : features) {
    if (!x.index.empty()) dim = std::max<std::size_t>(dim, x.index.back() + 1);
  }

  LinearMap map;
  map.lambda = lambda;
  map.weights_t = Matrix<double>(dim, proj_dim);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(proj_dim)));
  for (double& w : map.weights_t.flat()) w = gauss(rng);
  const double target_norm = frobenius(map.weights_t);

  auto renormalize = [&] {
    const double norm = frobenius(map.weights_t);
    if (!std::isfinite(norm) || norm == 0.0) {
      throw Error(ErrorCode::kDegenerate, "projection collapsed or diverged; reduce lr");
    }
    const double s = target_norm / norm;
    for (double& w : map.weights_t.flat()) w *= s;
  };

  std::vector<Triplet> order(train.begin(), train.end());
  SparseVector u, v;
  std::vector<double> au(proj_dim), av(proj_dim);
  constexpr std::size_t kRenormEvery = 64;
  std::size_t steps = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const Triplet& t : order) {
      sparse_diff(features[t.anchor], features[t.positive], u);
      sparse_diff(features[t.anchor], features[t.negative], v);
      project_into(map, u, au);
      project_into(map, v, av);
      const std::span<const double> cau(au), cav(av);
      const double loss = simd::dot(cau, cau) - lambda * simd::dot(cav, cav);
      if (!std::isfinite(loss)) throw Error(ErrorCode::kDegenerate, "non-finite projection loss");
      rank_one_update(map.weights_t, u, au, -2.0 * options.lr);
      rank_one_update(map.weights_t, v, av, 2.0 * lambda * options.lr);
      if (++steps % kRenormEvery == 0) renormalize();
    }
  }
  renormalize();
  return map;
}

LinearMap learn_weighted_bigram(std::span<const SparseVector> features,
                                std::span<const Triplet> train,
                                std::span<const Triplet> validation,
                                const WeightedBigramOptions& options) {
  if (options.proj_dims.empty() || options.lambdas.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty hyperparameter grid");
  }
  LinearMap best;
  bool have = false;
  for (std::size_t dim : options.proj_dims) {
    for (double lambda : options.lambdas) {
      LinearMap m = fit_projection(features, train, dim, lambda, options.sgd);
      m.validation_error = triplet_error(m, features, validation);
      if (!have || m.validation_error < best.validation_error) {
        best = std::move(m);
        have = true;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Synthetic topic corpus

SynthData synth_triplets(const SynthOptions& o) {
  if (o.n_topics < 2) {
    throw Error(ErrorCode::kNoNegativePool, "at least two topics are needed for negatives");
  }
  if (o.docs_per_topic < 6 || o.vocab_per_topic < 1 || o.doc_len < 1 || o.noise < 0 ||
      o.noise > 1 || o.burst < 0 || o.burst >= 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid synthetic corpus options");
  }
  const int shared = o.shared_vocab < 0 ? o.vocab_per_topic : o.shared_vocab;
  if (shared < 1 && o.noise > 0) throw Error(ErrorCode::kInvalidArgument, "empty shared pool");

  std::mt19937_64 rng(o.seed);
  std::bernoulli_distribution is_noise(o.noise);
  std::bernoulli_distribution is_repeat(o.burst);
  std::uniform_int_distribution<int> topic_word(0, o.vocab_per_topic - 1);
  std::uniform_int_distribution<int> shared_word(0, std::max(shared, 1) - 1);

  SynthData data;
  const auto n_topics = static_cast<std::size_t>(o.n_topics);
  const auto per_topic = static_cast<std::size_t>(o.docs_per_topic);
  for (std::size_t k = 0; k < n_topics; ++k) {
    for (std::size_t d = 0; d < per_topic; ++d) {
      Document doc;
      doc.reserve(static_cast<std::size_t>(o.doc_len));
      for (int i = 0; i < o.doc_len; ++i) {
        if (!doc.empty() && is_repeat(rng)) {
          std::uniform_int_distribution<std::size_t> earlier(0, doc.size() - 1);
          doc.push_back(doc[earlier(rng)]);
        } else if (is_noise(rng)) {
          doc.push_back("s" + std::to_string(shared_word(rng)));
        } else {
          doc.push_back("t" + std::to_string(k) + "w" + std::to_string(topic_word(rng)));
        }
      }
      data.docs.push_back(std::move(doc));
      data.topics.push_back(static_cast<int>(k));
    }
  }

  // Disjoint document pools per partition, per topic.
  const std::size_t held = std::max<std::size_t>(2, per_topic / 10);
  data.partition.assign(data.docs.size(), Partition::kTrain);
  std::vector<std::vector<std::vector<std::size_t>>> pools(
      3, std::vector<std::vector<std::size_t>>(n_topics));
  for (std::size_t k = 0; k < n_topics; ++k) {
    std::vector<std::size_t> ids(per_topic);
    for (std::size_t d = 0; d < per_topic; ++d) ids[d] = k * per_topic + d;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < per_topic; ++i) {
      const Partition p = i < held ? Partition::kTest
                          : i < 2 * held ? Partition::kValidation
                                         : Partition::kTrain;
      data.partition[ids[i]] = p;
      pools[static_cast<std::size_t>(p)][k].push_back(ids[i]);
    }
  }

  auto make = [&](Partition p, std::size_t count, std::vector<Triplet>& out) {
    const auto& pool = pools[static_cast<std::size_t>(p)];
    std::uniform_int_distribution<std::size_t> pick_topic(0, n_topics - 1);
    std::uniform_int_distribution<std::size_t> pick_other(0, n_topics - 2);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t k = pick_topic(rng);
      std::size_t other = pick_other(rng);
      if (other >= k) ++other;
      const auto& same = pool[k];
      std::uniform_int_distribution<std::size_t> pick_same(0, same.size() - 1);
      const std::size_t a = pick_same(rng);
      std::size_t b = pick_same(rng);
      while (b == a) b = pick_same(rng);
      const auto& diff = pool[other];
      std::uniform_int_distribution<std::size_t> pick_diff(0, diff.size() - 1);
      out.push_back({same[a], same[b], diff[pick_diff(rng)]});
    }
  };
  const SplitSizes sizes = split_sizes(o.n_triplets);
  make(Partition::kTrain, sizes.train, data.triplets.train);
  make(Partition::kValidation, sizes.validation, data.triplets.validation);
  make(Partition::kTest, sizes.test, data.triplets.test);
  return data;
}

// ---------------------------------------------------------------------------
// Evaluation harness

FeatureMethod parse_feature_method(const std::string& text) {
  if (text == "tfidf1") return FeatureMethod::kTfidfUnigram;
  if (text == "tfidf2") return FeatureMethod::kTfidfBigram;
  if (text == "wbigram") return FeatureMethod::kWeightedBigram;
  if (text == "avg") return FeatureMethod::kVectorAverage;
  if (text == "pv") return FeatureMethod::kParagraphVector;
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + text + "'");
}

const char* to_string(FeatureMethod method) {
  switch (method) {
    case FeatureMethod::kTfidfUnigram: return "tfidf1";
    case FeatureMethod::kTfidfBigram: return "tfidf2";
    case FeatureMethod::kWeightedBigram: return "wbigram";
    case FeatureMethod::kVectorAverage: return "avg";
    case FeatureMethod::kParagraphVector: return "pv";
  }
  return "?";
}

std::vector<std::size_t> training_documents(const TripletSet& set, std::size_t n_docs) {
  std::vector<char> used(n_docs, 0);
  for (const Triplet& t : set.train) {
    for (std::size_t i : {t.anchor, t.positive, t.negative}) {
      if (i >= n_docs) throw Error(ErrorCode::kInvalidArgument, "triplet references a missing document");
      used[i] = 1;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_docs; ++i) {
    if (used[i]) out.push_back(i);
  }
  return out;
}

namespace {

Matrix<double> paragraph_features(std::span<const Document> docs,
                                  std::span<const std::size_t> fit_ids,
                                  const std::vector<Document>& fit_docs,
                                  const TripletEvalOptions& o) {
  const Vocabulary vocab = build_vocab(fit_docs, o.min_count);
  const Corpus corpus = encode_corpus(fit_docs, vocab);
  ModelConfig dm = o.dm;
  dm.mode = Mode::kDistributedMemory;
  ModelConfig dbow = o.dbow;
  dbow.mode = Mode::kDistributedBagOfWords;
  TrainSchedule schedule = o.train;
  schedule.workers = o.workers;
  auto [model_dm, model_dbow] = train_pair(corpus, vocab, dm, dbow, schedule);

  std::vector<std::ptrdiff_t> fit_row(docs.size(), -1);
  for (std::size_t r = 0; r < fit_ids.size(); ++r) fit_row[fit_ids[r]] = static_cast<std::ptrdiff_t>(r);
  std::vector<Document> unseen;
  std::vector<std::size_t> unseen_ids;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (fit_row[i] < 0) {
      unseen.push_back(docs[i]);
      unseen_ids.push_back(i);
    }
  }
  const BatchInference inf_dm = infer_batch(model_dm, unseen, o.infer, o.workers);
  const BatchInference inf_dbow = infer_batch(model_dbow, unseen, o.infer, o.workers);

  Matrix<double> a(docs.size(), static_cast<std::size_t>(dm.dim_para));
  Matrix<double> b(docs.size(), static_cast<std::size_t>(dbow.dim_para));
  auto copy_row = [](std::span<const float> src, std::span<double> dst) {
    std::copy(src.begin(), src.end(), dst.begin());
  };
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (fit_row[i] >= 0) {
      const auto r = static_cast<std::size_t>(fit_row[i]);
      copy_row(model_dm.params.paragraphs.row(r), a.row(i));
      copy_row(model_dbow.params.paragraphs.row(r), b.row(i));
    }
  }
  for (std::size_t k = 0; k < unseen_ids.size(); ++k) {
    copy_row(inf_dm.vectors.row(k), a.row(unseen_ids[k]));
    copy_row(inf_dbow.vectors.row(k), b.row(unseen_ids[k]));
  }
  return combine_features(a, b);
}

}  // namespace

TripletReport evaluate_triplets(FeatureMethod method, std::span<const Document> docs,
                                const TripletSet& set, const TripletEvalOptions& o) {
  const std::vector<std::size_t> fit_ids = training_documents(set, docs.size());
  if (fit_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no training triplets");
  std::vector<Document> fit_docs;
  for (std::size_t i : fit_ids) fit_docs.push_back(docs[i]);

  auto score_dense = [&](const Matrix<double>& f) {
    return TripletReport{triplet_error(f, set.train, o.metric),
                         triplet_error(f, set.validation, o.metric),
                         triplet_error(f, set.test, o.metric)};
  };

  switch (method) {
    case FeatureMethod::kTfidfUnigram:
    case FeatureMethod::kTfidfBigram: {
      const int n = method == FeatureMethod::kTfidfUnigram ? 1 : 2;
      const auto f = TfidfModel::fit(fit_docs, n).transform(docs);
      return {triplet_error(f, set.train, o.metric), triplet_error(f, set.validation, o.metric),
              triplet_error(f, set.test, o.metric)};
    }
    case FeatureMethod::kWeightedBigram: {
      const auto f = TfidfModel::fit(fit_docs, 2).transform(docs);
      const LinearMap map = learn_weighted_bigram(f, set.train, set.validation, o.weighted);
      return score_dense(project(map, f));
    }
    case FeatureMethod::kVectorAverage: {
      const Vocabulary vocab = build_vocab(fit_docs, o.min_count);
      const Corpus corpus = encode_corpus(fit_docs, vocab);
      ModelConfig cfg = o.word;
      cfg.mode = Mode::kWordOnly;
      PVModel model = init_model(cfg, vocab, build_huffman(vocab), corpus.size(), o.train.seed);
      TrainSchedule schedule = o.train;
      schedule.workers = o.workers;
      train(model, corpus, schedule);
      return score_dense(vector_average_features(model, docs));
    }
    case FeatureMethod::kParagraphVector:
      return score_dense(paragraph_features(docs, fit_ids, fit_docs, o));
  }
  return {};
}

}  // namespace paravec
