#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "paravec/corpus.hpp"
#include "paravec/matrix.hpp"

namespace paravec {

enum class Mode { kDistributedMemory, kDistributedBagOfWords, kWordOnly };
enum class Composition { kConcat, kAverage };
enum class OutputLayer { kHierarchical, kFull };

const char* to_string(Mode mode);
const char* to_string(Composition composition);
const char* to_string(OutputLayer layer);
Mode parse_mode(const std::string& text);
Composition parse_composition(const std::string& text);
OutputLayer parse_output_layer(const std::string& text);

struct ModelConfig {
  int dim_word = 100;
  int dim_para = 100;
  /// Context words plus the target, so window-1 words feed the hidden state.
  int window = 8;
  Mode mode = Mode::kDistributedMemory;
  Composition composition = Composition::kConcat;
  OutputLayer output_layer = OutputLayer::kHierarchical;
  /// Adds the b term to the full softmax. The hierarchical layer has no bias.
  bool use_bias = true;
  /// Context taken from both sides of the target instead of the left only.
  /// Requires window-1 to be even.
  bool symmetric = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws kInvalidArgument when the combination is inconsistent.
void validate(const ModelConfig& config);

/// Width of the hidden state fed to the output layer.
std::size_t hidden_dim(const ModelConfig& config);

/// Number of context words feeding the hidden state (window - 1).
inline std::size_t context_size(const ModelConfig& config) {
  return static_cast<std::size_t>(config.window - 1);
}

struct ContextWindow {
  std::int32_t paragraph = 0;
  std::vector<WordId> context;  // window-1 entries, NULL where padded
  WordId target = Vocabulary::kNull;
};

/// All trainable arrays. `output` holds one row per internal Huffman node
/// (hierarchical) or one row per real word (full softmax, row w-1 for word
/// position w); `bias` is the full-softmax b, empty otherwise.
template <typename Real>
struct ModelParams {
  Matrix<Real> words;
  Matrix<Real> paragraphs;
  Matrix<Real> output;
  std::vector<Real> bias;

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out{words.template cast<U>(), paragraphs.template cast<U>(),
                       output.template cast<U>(), {}};
    out.bias.assign(bias.begin(), bias.end());
    return out;
  }
};

/// Where a slice of dLoss/dh flows back into the input tables.
struct InputSlice {
  enum class Table : std::uint8_t { kParagraph, kWord };
  Table table;
  std::int32_t row;
  std::uint32_t offset;  // into the hidden state
  std::uint32_t length;
  double scale;          // dh/d(row entry)
};

/// Gradient of the negative log-probability of one target. Every touched
/// output row r receives dLoss/d(row) = output_coeffs[k] * hidden, and in the
/// full-softmax layer dLoss/db_r = output_coeffs[k]. Buffers are reused
/// between calls.
struct Gradients {
  double loss = 0.0;
  std::vector<double> hidden;
  std::vector<double> grad_hidden;
  std::vector<std::int32_t> output_rows;
  std::vector<double> output_coeffs;
  std::vector<InputSlice> inputs;
};

/// Trained (or trainable) model: configuration, vocabulary, coding tree and
/// float parameters.
struct PVModel {
  ModelConfig config;
  Vocabulary vocab;
  HuffmanCoding huffman;
  ModelParams<float> params;

  std::size_t paragraph_count() const noexcept { return params.paragraphs.rows(); }
  /// N*p + M*q where M counts every vocabulary position (NULL included).
  std::size_t input_parameter_count() const noexcept {
    return params.paragraphs.size() + params.words.size();
  }
};

/// Word and paragraph tables uniform on +-0.5/dim from a seeded generator,
/// output rows and bias zero. WORD-ONLY models still carry an (unused) N x p
/// paragraph table so the parameter layout is mode-independent.
PVModel init_model(const ModelConfig& config, const Vocabulary& vocab,
                   const HuffmanCoding& huffman, std::size_t n_paragraphs, std::uint64_t seed);

/// Allocates parameters of the right shapes without the random draw.
template <typename Real>
ModelParams<Real> zero_params(const ModelConfig& config, std::size_t vocab_size,
                              std::size_t n_paragraphs);

/// Builds the hidden state. `paragraph` is the paragraph vector to use
/// (ignored for WORD-ONLY), so inference can pass a vector outside D.
template <typename Real>
void compose_hidden(const ModelConfig& config, const Matrix<Real>& words,
                    std::span<const Real> paragraph, const ContextWindow& ctx,
                    std::span<double> hidden);

template <typename Real>
void compose_hidden(const ModelConfig& config, const ModelParams<Real>& params,
                    const ContextWindow& ctx, std::span<double> hidden) {
  std::span<const Real> paragraph;
  if (config.mode != Mode::kWordOnly) {
    paragraph = params.paragraphs.row(static_cast<std::size_t>(ctx.paragraph));
  }
  compose_hidden(config, params.words, paragraph, ctx, hidden);
}

/// log p(target | h) under the full softmax, stabilized log-sum-exp.
template <typename Real>
double full_softmax_logprob(const ModelParams<Real>& params, std::span<const double> hidden,
                            WordId target);

/// log p(target | h) as the sum of log-sigmoid branch decisions along the
/// target's Huffman path.
template <typename Real>
double hs_logprob(const HuffmanCoding& huffman, const ModelParams<Real>& params,
                  std::span<const double> hidden, WordId target);

template <typename Real>
double logprob(const ModelConfig& config, const HuffmanCoding& huffman,
               const ModelParams<Real>& params, std::span<const double> hidden, WordId target) {
  return config.output_layer == OutputLayer::kFull
             ? full_softmax_logprob(params, hidden, target)
             : hs_logprob(huffman, params, hidden, target);
}

/// Loss, dLoss/dh and output-layer gradients at a given hidden state.
/// `grads.hidden` must already hold h.
template <typename Real>
void output_gradients(const ModelConfig& config, const HuffmanCoding& huffman,
                      const ModelParams<Real>& params, WordId target, Gradients& grads);

/// The input rows (and hidden-state segments) that a context reads.
void input_slices(const ModelConfig& config, const ContextWindow& ctx,
                  std::vector<InputSlice>& out);

/// Full forward/backward for one context window.
template <typename Real>
void step_gradients(const ModelConfig& config, const HuffmanCoding& huffman,
                    const ModelParams<Real>& params, const ContextWindow& ctx, Gradients& grads);

/// theta <- theta - lr * grad on touched rows only. Throws kNonFiniteUpdate
/// if an updated entry is no longer finite (the update is still applied).
template <typename Real>
void apply_update(ModelParams<Real>& params, const Gradients& grads, double lr);

double log_sigmoid(double x);
double sigmoid(double x);

}  // namespace paravec
