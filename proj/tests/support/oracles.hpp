#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "paravec/corpus.hpp"
#include "paravec/model.hpp"

namespace oracle {

using namespace paravec;

inline std::string word_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%04zu", i);
  return buf;
}

// Vocabulary with the given counts; counts are sorted descending and names
// assigned in that order so the ordering invariant holds.
inline Vocabulary vocab_from_counts(std::vector<std::uint64_t> counts) {
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::vector<Vocabulary::Entry> entries{{std::string(Vocabulary::kNullSurface), 0}};
  for (std::size_t i = 0; i < counts.size(); ++i) entries.push_back({word_name(i), counts[i]});
  return Vocabulary::from_entries(std::move(entries));
}

inline Vocabulary random_vocab(std::mt19937_64& rng, std::size_t words, std::uint64_t max_count) {
  std::uniform_int_distribution<std::uint64_t> count(1, max_count);
  std::vector<std::uint64_t> counts(words);
  for (auto& c : counts) c = count(rng);
  return vocab_from_counts(counts);
}

// --- Huffman ----------------------------------------------------------------

inline bool is_prefix(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

inline bool prefix_free(const HuffmanCoding& h) {
  for (std::size_t i = 0; i < h.codes.size(); ++i) {
    for (std::size_t j = 0; j < h.codes.size(); ++j) {
      if (i != j && is_prefix(h.codes[i], h.codes[j])) return false;
    }
  }
  return true;
}

// Exact Kraft sum check in integer arithmetic.
inline bool kraft_equality(const HuffmanCoding& h) {
  std::size_t longest = 0;
  for (const auto& c : h.codes) longest = std::max(longest, c.size());
  if (longest > 62) return false;
  std::uint64_t sum = 0;
  for (const auto& c : h.codes) sum += std::uint64_t{1} << (longest - c.size());
  return sum == (std::uint64_t{1} << longest);
}

// count(a) > count(b) implies len(a) <= len(b). Equal counts cannot in
// general share a length (three words of count 1 need lengths 1, 2, 2), so
// ties are unconstrained.
inline bool length_monotone(const Vocabulary& v, const HuffmanCoding& h) {
  for (std::size_t a = 1; a < v.size(); ++a) {
    for (std::size_t b = 1; b < v.size(); ++b) {
      const auto wa = static_cast<WordId>(a), wb = static_cast<WordId>(b);
      if (v.count(wa) > v.count(wb) && h.code(wa).size() > h.code(wb).size()) return false;
    }
  }
  return true;
}

inline std::uint64_t weighted_length(const Vocabulary& v, const HuffmanCoding& h) {
  std::uint64_t total = 0;
  for (std::size_t w = 1; w < v.size(); ++w) {
    total += v.count(static_cast<WordId>(w)) * h.code(static_cast<WordId>(w)).size();
  }
  return total;
}

// Minimum of sum(count * length) over every length assignment satisfying
// Kraft equality, i.e. over every complete prefix code. Exhaustive, so only
// for a handful of words.
inline std::uint64_t brute_force_optimal_length(const std::vector<std::uint64_t>& counts) {
  const std::size_t n = counts.size();
  if (n == 1) return 0;
  const std::size_t max_len = n - 1;
  std::vector<std::size_t> len(n, 1);
  std::uint64_t best = UINT64_MAX;
  while (true) {
    std::uint64_t kraft = 0;
    for (std::size_t l : len) kraft += std::uint64_t{1} << (max_len - l);
    if (kraft == (std::uint64_t{1} << max_len)) {
      std::uint64_t cost = 0;
      for (std::size_t i = 0; i < n; ++i) cost += counts[i] * len[i];
      best = std::min(best, cost);
    }
    std::size_t i = 0;
    while (i < n && len[i] == max_len) len[i++] = 1;
    if (i == n) break;
    ++len[i];
  }
  return best;
}

// --- random models ----------------------------------------------------------

struct RandomInstance {
  ModelConfig config;
  Vocabulary vocab;
  HuffmanCoding huffman;
  ModelParams<double> params;
  ContextWindow ctx;
};

// Small model with every parameter (output rows and bias included) drawn
// from U(-1, 1), and a random context that may contain NULL.
inline RandomInstance random_instance(Mode mode, Composition comp, OutputLayer layer,
                                      std::mt19937_64& rng, std::size_t max_words = 8) {
  std::uniform_int_distribution<int> dim(1, 4), win(2, 5);
  std::uniform_int_distribution<std::size_t> nwords(2, max_words);
  RandomInstance r;
  r.config.mode = mode;
  r.config.composition = comp;
  r.config.output_layer = layer;
  r.config.dim_word = dim(rng);
  r.config.dim_para = comp == Composition::kAverage && mode == Mode::kDistributedMemory
                          ? r.config.dim_word
                          : dim(rng);
  r.config.window = win(rng);
  r.config.use_bias = true;
  r.vocab = random_vocab(rng, nwords(rng), 20);
  r.huffman = build_huffman(r.vocab);
  const std::size_t n_para = 3;
  r.params = zero_params<double>(r.config, r.vocab.size(), n_para);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : r.params.words.flat()) x = u(rng);
  for (double& x : r.params.paragraphs.flat()) x = u(rng);
  for (double& x : r.params.output.flat()) x = u(rng);
  for (double& x : r.params.bias) x = u(rng);
  std::uniform_int_distribution<WordId> any_word(0, static_cast<WordId>(r.vocab.size() - 1));
  std::uniform_int_distribution<WordId> real_word(1, static_cast<WordId>(r.vocab.size() - 1));
  std::uniform_int_distribution<std::int32_t> para(0, static_cast<std::int32_t>(n_para - 1));
  r.ctx.paragraph = para(rng);
  r.ctx.context.resize(context_size(r.config));
  for (WordId& w : r.ctx.context) w = any_word(rng);
  r.ctx.target = real_word(rng);
  return r;
}

inline double window_loss(const RandomInstance& r, const ModelParams<double>& params) {
  std::vector<double> h(hidden_dim(r.config));
  compose_hidden(r.config, params, r.ctx, std::span<double>(h));
  return -logprob(r.config, r.huffman, params, std::span<const double>(h), r.ctx.target);
}

// Expands the sparse gradient description into dense arrays shaped like the
// parameters.
inline ModelParams<double> dense_gradient(const RandomInstance& r, const Gradients& g) {
  ModelParams<double> d = zero_params<double>(r.config, r.vocab.size(), r.params.paragraphs.rows());
  for (std::size_t k = 0; k < g.output_rows.size(); ++k) {
    auto row = d.output.row(static_cast<std::size_t>(g.output_rows[k]));
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += g.output_coeffs[k] * g.hidden[j];
    if (!d.bias.empty()) d.bias[static_cast<std::size_t>(g.output_rows[k])] += g.output_coeffs[k];
  }
  for (const InputSlice& s : g.inputs) {
    Matrix<double>& table = s.table == InputSlice::Table::kParagraph ? d.paragraphs : d.words;
    auto row = table.row(static_cast<std::size_t>(s.row));
    for (std::size_t j = 0; j < s.length; ++j) row[j] += s.scale * g.grad_hidden[s.offset + j];
  }
  return d;
}

struct GradCheck {
  double max_error = 0.0;  // |analytic - numeric| / max(1, |analytic|)
  std::size_t entries = 0;
  double loss_mismatch = 0.0;
};

// Central differences over every scalar parameter of the instance.
inline GradCheck gradient_check(const RandomInstance& r, double eps = 1e-5) {
  Gradients g;
  step_gradients(r.config, r.huffman, r.params, r.ctx, g);
  const ModelParams<double> analytic = dense_gradient(r, g);
  GradCheck out;
  out.loss_mismatch = std::abs(g.loss - window_loss(r, r.params));
  ModelParams<double> probe = r.params;
  auto sweep = [&](std::span<double> values, std::span<const double> grads) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = window_loss(r, probe);
      values[i] = saved - eps;
      const double down = window_loss(r, probe);
      values[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = std::abs(grads[i] - numeric) / std::max(1.0, std::abs(grads[i]));
      out.max_error = std::max(out.max_error, err);
      ++out.entries;
    }
  };
  sweep(probe.words.flat(), analytic.words.flat());
  if (r.config.mode != Mode::kWordOnly) sweep(probe.paragraphs.flat(), analytic.paragraphs.flat());
  sweep(probe.output.flat(), analytic.output.flat());
  sweep(probe.bias, analytic.bias);
  return out;
}

// --- normalization ----------------------------------------------------------

// Walks the coding tree from the root, multiplying branch probabilities, and
// returns the total mass reaching the leaves. The tree is reconstructed from
// the (path, code) pairs alone.
inline double tree_mass(const HuffmanCoding& h, const ModelParams<double>& params,
                        std::span<const double> hidden, std::vector<double>* leaf_prob = nullptr) {
  if (h.codes.size() == 1) {
    if (leaf_prob) leaf_prob->assign(1, 1.0);
    return 1.0;
  }
  // child[(node, bit)] = next internal node, or -(leaf index + 1)
  std::map<std::pair<std::int32_t, int>, std::int64_t> child;
  for (std::size_t w = 0; w < h.codes.size(); ++w) {
    for (std::size_t j = 0; j < h.paths[w].size(); ++j) {
      const std::int64_t next =
          j + 1 < h.paths[w].size() ? h.paths[w][j + 1] : -static_cast<std::int64_t>(w) - 1;
      child[{h.paths[w][j], h.codes[w][j]}] = next;
    }
  }
  if (leaf_prob) leaf_prob->assign(h.codes.size(), 0.0);
  const auto root = static_cast<std::int32_t>(h.internal_nodes - 1);
  double total = 0.0;
  std::function<void(std::int32_t, double)> walk = [&](std::int32_t node, double mass) {
    double x = 0.0;
    auto v = params.output.row(static_cast<std::size_t>(node));
    for (std::size_t j = 0; j < v.size(); ++j) x += v[j] * hidden[j];
    const double left = 1.0 / (1.0 + std::exp(-x));
    for (int bit = 0; bit < 2; ++bit) {
      const double m = mass * (bit == 0 ? left : 1.0 - left);
      const std::int64_t next = child.at({node, bit});
      if (next < 0) {
        total += m;
        if (leaf_prob) (*leaf_prob)[static_cast<std::size_t>(-next - 1)] = m;
      } else {
        walk(static_cast<std::int32_t>(next), m);
      }
    }
  };
  walk(root, 1.0);
  return total;
}

}  // namespace oracle
