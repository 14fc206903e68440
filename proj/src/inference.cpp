#include "paravec/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "paravec/error.hpp"
#include "paravec/simd/kernels.hpp"
#include "paravec/trainer.hpp"

namespace paravec {

std::uint64_t batch_seed(std::uint64_t seed, std::size_t position) {
  return derive_seed(seed, 0x1000 + position);
}

InferredVector infer_encoded(const PVModel& model, std::span<const WordId> doc,
                             const InferenceSchedule& schedule) {
  const ModelConfig& cfg = model.config;
  if (cfg.mode == Mode::kWordOnly) {
    throw Error(ErrorCode::kInvalidArgument, "word-only models have no paragraph vectors");
  }
  if (schedule.steps < 0 || !(schedule.lr_start > 0) || !(schedule.lr_min > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid inference schedule");
  }
  const auto p = static_cast<std::size_t>(cfg.dim_para);
  InferredVector out;
  if (doc.empty()) {
    if (!schedule.zero_on_empty) {
      throw Error(ErrorCode::kEmptyAfterOov, "no token of the document is in the vocabulary");
    }
    out.vector.assign(p, 0.0f);
    return out;
  }

  std::mt19937_64 init_rng(schedule.seed);
  const double bound = 0.5 / static_cast<double>(p);
  std::uniform_real_distribution<double> dist(-bound, bound);
  out.vector.resize(p);
  for (float& v : out.vector) v = static_cast<float>(dist(init_rng));

  // Only the paragraph segment of dLoss/dh is used.
  double scale = 1.0;
  if (cfg.mode == Mode::kDistributedMemory && cfg.composition == Composition::kAverage) {
    scale = 1.0 / static_cast<double>(cfg.window);
  }

  std::mt19937_64 sample_rng(derive_seed(schedule.seed, 1));
  const std::size_t planned = doc.size() * static_cast<std::size_t>(schedule.steps);
  std::size_t processed = 0;
  Gradients grads;
  grads.hidden.resize(hidden_dim(cfg));
  ContextWindow ctx;
  std::span<float> vec(out.vector);

  for (int step = 0; step < schedule.steps; ++step) {
    double pass_loss = 0.0;
    for (std::size_t t = 0; t < doc.size(); ++t) {
      fill_window(doc, t, cfg.window, cfg.symmetric, ctx);
      if (cfg.mode == Mode::kDistributedBagOfWords) ctx.target = sample_window_word(ctx, sample_rng);
      compose_hidden(cfg, model.params.words, std::span<const float>(vec), ctx,
                     std::span<double>(grads.hidden));
      output_gradients(cfg, model.huffman, model.params, ctx.target, grads);
      pass_loss += grads.loss;
      const double lr = interpolate_lr(schedule.lr_start, schedule.lr_min, processed++, planned);
      simd::axpy(-lr * scale, std::span<const double>(grads.grad_hidden).first(p), vec);
    }
    if (!std::all_of(vec.begin(), vec.end(), [](float v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteUpdate, "inferred vector became non-finite");
    }
    const double mean = pass_loss / static_cast<double>(doc.size());
    const bool stalled = schedule.until_converged && !out.pass_losses.empty() &&
                         out.pass_losses.back() - mean < schedule.tolerance;
    out.pass_losses.push_back(mean);
    if (stalled) break;
  }
  return out;
}

InferredVector infer_vector(const PVModel& model, const Document& tokens,
                            const InferenceSchedule& schedule) {
  const std::vector<WordId> ids = encode_document(tokens, model.vocab);
  return infer_encoded(model, ids, schedule);
}

BatchInference infer_batch(const PVModel& model, std::span<const Document> docs,
                           const InferenceSchedule& schedule, int workers) {
  if (workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  const auto p = static_cast<std::size_t>(model.config.dim_para);
  BatchInference out{Matrix<float>(docs.size(), p), {}};
  std::vector<char> empty(docs.size(), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::atomic<std::size_t> next{0};

  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = next++; i < docs.size(); i = next++) {
        InferenceSchedule s = schedule;
        s.seed = batch_seed(schedule.seed, i);
        s.zero_on_empty = false;
        try {
          const InferredVector r = infer_vector(model, docs[i], s);
          std::copy(r.vector.begin(), r.vector.end(), out.vectors.row(i).begin());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyAfterOov) throw;
          empty[i] = 1;
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < static_cast<std::size_t>(workers); ++w) threads.emplace_back(work, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (empty[i]) out.empty_docs.push_back(i);
  }
  return out;
}

}  // namespace paravec
