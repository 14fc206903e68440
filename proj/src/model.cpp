#include "paravec/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "paravec/error.hpp"
#include "paravec/simd/kernels.hpp"

namespace paravec {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kDistributedMemory: return "pv-dm";
    case Mode::kDistributedBagOfWords: return "pv-dbow";
    case Mode::kWordOnly: return "word-only";
  }
  return "?";
}

const char* to_string(Composition composition) {
  return composition == Composition::kConcat ? "concat" : "average";
}

const char* to_string(OutputLayer layer) {
  return layer == OutputLayer::kHierarchical ? "hierarchical" : "full";
}

Mode parse_mode(const std::string& text) {
  if (text == "pv-dm") return Mode::kDistributedMemory;
  if (text == "pv-dbow") return Mode::kDistributedBagOfWords;
  if (text == "word-only") return Mode::kWordOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + text + "'");
}

Composition parse_composition(const std::string& text) {
  if (text == "concat") return Composition::kConcat;
  if (text == "average") return Composition::kAverage;
  throw Error(ErrorCode::kInvalidArgument, "unknown composition '" + text + "'");
}

OutputLayer parse_output_layer(const std::string& text) {
  if (text == "hierarchical") return OutputLayer::kHierarchical;
  if (text == "full") return OutputLayer::kFull;
  throw Error(ErrorCode::kInvalidArgument, "unknown output layer '" + text + "'");
}

void validate(const ModelConfig& config) {
  if (config.dim_word < 1 || config.dim_para < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dimensions must be positive");
  }
  if (config.window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
  if (config.mode == Mode::kDistributedMemory && config.composition == Composition::kAverage &&
      config.dim_para != config.dim_word) {
    throw Error(ErrorCode::kInvalidArgument, "average composition requires dim_para == dim_word");
  }
  if (config.symmetric && (config.window - 1) % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "symmetric context needs an odd window");
  }
}

std::size_t hidden_dim(const ModelConfig& config) {
  const auto p = static_cast<std::size_t>(config.dim_para);
  const auto q = static_cast<std::size_t>(config.dim_word);
  const std::size_t ctx = context_size(config);
  switch (config.mode) {
    case Mode::kDistributedMemory:
      return config.composition == Composition::kConcat ? p + ctx * q : q;
    case Mode::kDistributedBagOfWords:
      return p;
    case Mode::kWordOnly:
      return config.composition == Composition::kConcat ? ctx * q : q;
  }
  return 0;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

template <typename Real>
ModelParams<Real> zero_params(const ModelConfig& config, std::size_t vocab_size,
                              std::size_t n_paragraphs) {
  validate(config);
  const std::size_t h = hidden_dim(config);
  const std::size_t real_words = vocab_size - 1;
  ModelParams<Real> params;
  params.words = Matrix<Real>(vocab_size, static_cast<std::size_t>(config.dim_word));
  params.paragraphs = Matrix<Real>(n_paragraphs, static_cast<std::size_t>(config.dim_para));
  if (config.output_layer == OutputLayer::kHierarchical) {
    params.output = Matrix<Real>(real_words > 0 ? real_words - 1 : 0, h);
  } else {
    params.output = Matrix<Real>(real_words, h);
    if (config.use_bias) params.bias.assign(real_words, Real{0});
  }
  return params;
}

template ModelParams<float> zero_params<float>(const ModelConfig&, std::size_t, std::size_t);
template ModelParams<double> zero_params<double>(const ModelConfig&, std::size_t, std::size_t);

PVModel init_model(const ModelConfig& config, const Vocabulary& vocab,
                   const HuffmanCoding& huffman, std::size_t n_paragraphs, std::uint64_t seed) {
  if (n_paragraphs < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one paragraph");
  if (vocab.word_count() < 1) throw Error(ErrorCode::kInvalidArgument, "empty vocabulary");
  PVModel model{config, vocab, huffman, zero_params<float>(config, vocab.size(), n_paragraphs)};

  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix<float>& m) {
    const double bound = 0.5 / static_cast<double>(m.cols());
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : m.flat()) v = static_cast<float>(dist(rng));
  };
  fill(model.params.words);
  fill(model.params.paragraphs);
  return model;
}

template <typename Real>
void compose_hidden(const ModelConfig& config, const Matrix<Real>& words,
                    std::span<const Real> paragraph, const ContextWindow& ctx,
                    std::span<double> hidden) {
  const std::size_t q = words.cols();
  auto copy_into = [](std::span<const Real> src, std::span<double> dst) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]);
  };

  if (config.mode == Mode::kDistributedBagOfWords) {
    copy_into(paragraph, hidden);
    return;
  }

  const bool with_paragraph = config.mode == Mode::kDistributedMemory;
  if (config.composition == Composition::kConcat) {
    std::size_t offset = 0;
    if (with_paragraph) {
      copy_into(paragraph, hidden.first(paragraph.size()));
      offset = paragraph.size();
    }
    for (WordId w : ctx.context) {
      copy_into(words.row(static_cast<std::size_t>(w)), hidden.subspan(offset, q));
      offset += q;
    }
    return;
  }

  std::fill(hidden.begin(), hidden.end(), 0.0);
  std::size_t parts = ctx.context.size();
  if (with_paragraph) {
    simd::axpy(1.0, paragraph, hidden);
    ++parts;
  }
  for (WordId w : ctx.context) simd::axpy(1.0, words.row(static_cast<std::size_t>(w)), hidden);
  const double inv = 1.0 / static_cast<double>(parts);
  for (double& v : hidden) v *= inv;
}

void input_slices(const ModelConfig& config, const ContextWindow& ctx,
                  std::vector<InputSlice>& out) {
  out.clear();
  const auto p = static_cast<std::uint32_t>(config.dim_para);
  const auto q = static_cast<std::uint32_t>(config.dim_word);
  if (config.mode == Mode::kDistributedBagOfWords) {
    out.push_back({InputSlice::Table::kParagraph, ctx.paragraph, 0, p, 1.0});
    return;
  }
  const bool with_paragraph = config.mode == Mode::kDistributedMemory;
  if (config.composition == Composition::kConcat) {
    std::uint32_t offset = 0;
    if (with_paragraph) {
      out.push_back({InputSlice::Table::kParagraph, ctx.paragraph, 0, p, 1.0});
      offset = p;
    }
    for (WordId w : ctx.context) {
      out.push_back({InputSlice::Table::kWord, w, offset, q, 1.0});
      offset += q;
    }
    return;
  }
  const double scale =
      1.0 / static_cast<double>(ctx.context.size() + (with_paragraph ? 1 : 0));
  if (with_paragraph) out.push_back({InputSlice::Table::kParagraph, ctx.paragraph, 0, p, scale});
  for (WordId w : ctx.context) out.push_back({InputSlice::Table::kWord, w, 0, q, scale});
}

namespace {

// Logits y_j = b_j + U_j . h for every real word, written to `logits`;
// returns log-sum-exp.
template <typename Real>
double softmax_logits(const ModelParams<Real>& params, std::span<const double> hidden,
                      std::vector<double>& logits) {
  const std::size_t n = params.output.rows();
  logits.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    logits[j] = simd::dot(params.output.row(j), hidden);
    if (!params.bias.empty()) logits[j] += static_cast<double>(params.bias[j]);
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double y : logits) s += std::exp(y - m);
  return m + std::log(s);
}

void check_target(WordId target, std::size_t real_words) {
  if (target < 1 || static_cast<std::size_t>(target) > real_words) {
    throw Error(ErrorCode::kInvalidArgument, "target must be a real word position");
  }
}

}  // namespace

template <typename Real>
double full_softmax_logprob(const ModelParams<Real>& params, std::span<const double> hidden,
                            WordId target) {
  check_target(target, params.output.rows());
  thread_local std::vector<double> logits;
  const double lse = softmax_logits(params, hidden, logits);
  return logits[static_cast<std::size_t>(target) - 1] - lse;
}

template <typename Real>
double hs_logprob(const HuffmanCoding& huffman, const ModelParams<Real>& params,
                  std::span<const double> hidden, WordId target) {
  check_target(target, huffman.codes.size());
  const auto code = huffman.code(target);
  const auto path = huffman.path(target);
  double lp = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    const double x = simd::dot(params.output.row(static_cast<std::size_t>(path[j])), hidden);
    lp += log_sigmoid(code[j] == 0 ? x : -x);
  }
  return lp;
}

template <typename Real>
void output_gradients(const ModelConfig& config, const HuffmanCoding& huffman,
                      const ModelParams<Real>& params, WordId target, Gradients& grads) {
  std::span<const double> hidden = grads.hidden;
  grads.grad_hidden.assign(hidden.size(), 0.0);
  grads.output_rows.clear();
  grads.output_coeffs.clear();

  if (config.output_layer == OutputLayer::kHierarchical) {
    check_target(target, huffman.codes.size());
    const auto code = huffman.code(target);
    const auto path = huffman.path(target);
    double lp = 0.0;
    for (std::size_t j = 0; j < path.size(); ++j) {
      const auto row = params.output.row(static_cast<std::size_t>(path[j]));
      const double x = simd::dot(row, hidden);
      const bool left = code[j] == 0;
      lp += log_sigmoid(left ? x : -x);
      const double coeff = sigmoid(x) - (left ? 1.0 : 0.0);
      grads.output_rows.push_back(path[j]);
      grads.output_coeffs.push_back(coeff);
      simd::axpy(coeff, row, std::span<double>(grads.grad_hidden));
    }
    grads.loss = -lp;
    return;
  }

  check_target(target, params.output.rows());
  thread_local std::vector<double> logits;
  const double lse = softmax_logits(params, hidden, logits);
  const auto t = static_cast<std::size_t>(target) - 1;
  grads.loss = -(logits[t] - lse);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double coeff = std::exp(logits[j] - lse) - (j == t ? 1.0 : 0.0);
    grads.output_rows.push_back(static_cast<std::int32_t>(j));
    grads.output_coeffs.push_back(coeff);
    simd::axpy(coeff, params.output.row(j), std::span<double>(grads.grad_hidden));
  }
}

template <typename Real>
void step_gradients(const ModelConfig& config, const HuffmanCoding& huffman,
                    const ModelParams<Real>& params, const ContextWindow& ctx, Gradients& grads) {
  grads.hidden.resize(hidden_dim(config));
  compose_hidden(config, params, ctx, std::span<double>(grads.hidden));
  output_gradients(config, huffman, params, ctx.target, grads);
  input_slices(config, ctx, grads.inputs);
}

template <typename Real>
void apply_update(ModelParams<Real>& params, const Gradients& grads, double lr) {
  if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  if (lr == 0.0) return;

  bool finite = true;
  auto check = [&finite](std::span<const Real> row) {
    for (Real v : row) finite = finite && std::isfinite(v);
  };

  const std::span<const double> hidden = grads.hidden;
  for (std::size_t k = 0; k < grads.output_rows.size(); ++k) {
    const auto r = static_cast<std::size_t>(grads.output_rows[k]);
    const double coeff = grads.output_coeffs[k];
    auto row = params.output.row(r);
    simd::axpy(-lr * coeff, hidden, row);
    check(row);
    if (!params.bias.empty()) {
      params.bias[r] = static_cast<Real>(static_cast<double>(params.bias[r]) - lr * coeff);
      finite = finite && std::isfinite(params.bias[r]);
    }
  }

  const std::span<const double> grad_hidden = grads.grad_hidden;
  for (const InputSlice& s : grads.inputs) {
    Matrix<Real>& table =
        s.table == InputSlice::Table::kParagraph ? params.paragraphs : params.words;
    auto row = table.row(static_cast<std::size_t>(s.row));
    simd::axpy(-lr * s.scale, grad_hidden.subspan(s.offset, s.length), row);
    check(row);
  }

  if (!finite) throw Error(ErrorCode::kNonFiniteUpdate, "parameter became non-finite");
}

#define PARAVEC_INSTANTIATE(Real)                                                              \
  template void compose_hidden<Real>(const ModelConfig&, const Matrix<Real>&,                  \
                                     std::span<const Real>, const ContextWindow&,              \
                                     std::span<double>);                                       \
  template double full_softmax_logprob<Real>(const ModelParams<Real>&, std::span<const double>, \
                                             WordId);                                          \
  template double hs_logprob<Real>(const HuffmanCoding&, const ModelParams<Real>&,             \
                                   std::span<const double>, WordId);                           \
  template void output_gradients<Real>(const ModelConfig&, const HuffmanCoding&,               \
                                       const ModelParams<Real>&, WordId, Gradients&);          \
  template void step_gradients<Real>(const ModelConfig&, const HuffmanCoding&,                 \
                                     const ModelParams<Real>&, const ContextWindow&,           \
                                     Gradients&);                                              \
  template void apply_update<Real>(ModelParams<Real>&, const Gradients&, double);

PARAVEC_INSTANTIATE(float)
PARAVEC_INSTANTIATE(double)

#undef PARAVEC_INSTANTIATE

}  // namespace paravec
