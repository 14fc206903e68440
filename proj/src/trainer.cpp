#include "paravec/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "paravec/error.hpp"

namespace paravec {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void fill_window(std::span<const WordId> doc, std::size_t t, int window, bool symmetric,
                 ContextWindow& ctx) {
  const auto n = static_cast<std::ptrdiff_t>(doc.size());
  const auto pos = static_cast<std::ptrdiff_t>(t);
  const auto ctx_len = static_cast<std::ptrdiff_t>(window - 1);
  ctx.context.resize(static_cast<std::size_t>(ctx_len));
  ctx.target = doc[t];
  auto at = [&](std::ptrdiff_t i) { return i >= 0 && i < n ? doc[static_cast<std::size_t>(i)] : Vocabulary::kNull; };
  if (!symmetric) {
    for (std::ptrdiff_t k = 0; k < ctx_len; ++k) {
      ctx.context[static_cast<std::size_t>(k)] = at(pos - ctx_len + k);
    }
    return;
  }
  const std::ptrdiff_t half = ctx_len / 2;
  for (std::ptrdiff_t k = 0; k < half; ++k) {
    ctx.context[static_cast<std::size_t>(k)] = at(pos - half + k);
    ctx.context[static_cast<std::size_t>(half + k)] = at(pos + 1 + k);
  }
}

std::vector<ContextWindow> enumerate_windows(std::span<const WordId> doc, int window,
                                             std::int32_t paragraph, bool symmetric) {
  if (window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
  std::vector<ContextWindow> out(doc.size());
  for (std::size_t t = 0; t < doc.size(); ++t) {
    out[t].paragraph = paragraph;
    fill_window(doc, t, window, symmetric, out[t]);
  }
  return out;
}

double interpolate_lr(double lr_start, double lr_min, std::size_t processed, std::size_t planned) {
  if (planned == 0) return lr_start;
  const double frac = std::min(1.0, static_cast<double>(processed) / static_cast<double>(planned));
  return std::max(lr_min, lr_start - (lr_start - lr_min) * frac);
}

namespace {

void check_schedule(const TrainSchedule& s) {
  if (s.epochs < 0 || s.workers < 1 || !(s.lr_start > 0) || !(s.lr_min > 0) ||
      s.lr_min > s.lr_start) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training schedule");
  }
}

}  // namespace

WordId sample_window_word(const ContextWindow& ctx, std::mt19937_64& rng) {
  thread_local std::vector<WordId> pool;
  pool.clear();
  for (WordId w : ctx.context) {
    if (w != Vocabulary::kNull) pool.push_back(w);
  }
  pool.push_back(ctx.target);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

namespace {

struct Partial {
  double loss = 0.0;
  std::size_t windows = 0;
};

class EpochRunner {
 public:
  EpochRunner(PVModel& model, const Corpus& corpus, const TrainSchedule& schedule,
              std::size_t planned)
      : model_(model), corpus_(corpus), schedule_(schedule), planned_(planned) {}

  Partial run_shard(std::span<const std::size_t> docs, std::mt19937_64& rng,
                    std::size_t draws) {
    Partial part;
    Gradients grads;
    ContextWindow ctx;
    const ModelConfig& cfg = model_.config;
    auto process = [&](std::size_t d, std::size_t t) {
      const auto& doc = corpus_.documents[d];
      ctx.paragraph = static_cast<std::int32_t>(d);
      fill_window(doc, t, cfg.window, cfg.symmetric, ctx);
      if (cfg.mode == Mode::kDistributedBagOfWords) ctx.target = sample_window_word(ctx, rng);
      step_gradients(cfg, model_.huffman, model_.params, ctx, grads);
      const std::size_t done = processed_.fetch_add(1, std::memory_order_relaxed);
      apply_update(model_.params, grads,
                   interpolate_lr(schedule_.lr_start, schedule_.lr_min, done, planned_));
      part.loss += grads.loss;
      ++part.windows;
    };

    if (!schedule_.sample_windows) {
      for (std::size_t d : docs) {
        for (std::size_t t = 0; t < corpus_.documents[d].size(); ++t) process(d, t);
      }
      return part;
    }
    std::vector<std::size_t> nonempty;
    for (std::size_t d : docs) {
      if (!corpus_.documents[d].empty()) nonempty.push_back(d);
    }
    if (nonempty.empty()) return part;
    std::uniform_int_distribution<std::size_t> pick_doc(0, nonempty.size() - 1);
    for (std::size_t k = 0; k < draws; ++k) {
      const std::size_t d = nonempty[pick_doc(rng)];
      std::uniform_int_distribution<std::size_t> pick_pos(0, corpus_.documents[d].size() - 1);
      process(d, pick_pos(rng));
    }
    return part;
  }

  std::size_t processed() const { return processed_.load(); }

 private:
  PVModel& model_;
  const Corpus& corpus_;
  const TrainSchedule& schedule_;
  std::size_t planned_;
  std::atomic<std::size_t> processed_{0};
};

}  // namespace

TrainReport train(PVModel& model, const Corpus& corpus, const TrainSchedule& schedule,
                  const EpochCallback& on_epoch) {
  check_schedule(schedule);
  if (corpus.size() != model.paragraph_count()) {
    throw Error(ErrorCode::kInvalidArgument, "corpus size does not match paragraph table");
  }
  for (const auto& doc : corpus.documents) {
    for (WordId w : doc) {
      if (w <= Vocabulary::kNull || static_cast<std::size_t>(w) >= model.vocab.size()) {
        throw Error(ErrorCode::kInvalidArgument, "corpus references a word outside the vocabulary");
      }
    }
  }

  TrainReport report;
  const std::size_t per_epoch = corpus.token_count();
  const std::size_t planned = per_epoch * static_cast<std::size_t>(schedule.epochs);
  EpochRunner runner(model, corpus, schedule, planned);
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto workers = static_cast<std::size_t>(schedule.workers);

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const auto epoch_seed = derive_seed(schedule.seed, static_cast<std::uint64_t>(epoch));
    if (schedule.shuffle) {
      std::mt19937_64 rng(epoch_seed);
      std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<Partial> partials(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto run_worker = [&](std::size_t w) {
      try {
        const std::size_t begin = order.size() * w / workers;
        const std::size_t end = order.size() * (w + 1) / workers;
        std::span<const std::size_t> shard(order.data() + begin, end - begin);
        std::mt19937_64 rng(derive_seed(epoch_seed, w));
        const std::size_t draws = per_epoch * (w + 1) / workers - per_epoch * w / workers;
        partials[w] = runner.run_shard(shard, rng, draws);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (workers == 1) {
      run_worker(0);
    } else {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_worker, w);
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    Partial total;
    for (const Partial& p : partials) {
      total.loss += p.loss;
      total.windows += p.windows;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.windows = total.windows;
    stats.mean_loss = total.windows > 0 ? total.loss / static_cast<double>(total.windows) : 0.0;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    report.epochs.push_back(stats);
    report.windows_processed += total.windows;
    if (on_epoch) on_epoch(stats);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::pair<PVModel, PVModel> train_pair(const Corpus& corpus, const Vocabulary& vocab,
                                       const ModelConfig& config_dm,
                                       const ModelConfig& config_dbow,
                                       const TrainSchedule& schedule,
                                       std::pair<TrainReport, TrainReport>* reports) {
  if (config_dm.mode != Mode::kDistributedMemory ||
      config_dbow.mode != Mode::kDistributedBagOfWords) {
    throw Error(ErrorCode::kInvalidArgument, "train_pair expects a PV-DM and a PV-DBOW config");
  }
  const HuffmanCoding huffman = build_huffman(vocab);
  const std::uint64_t seed_dm = derive_seed(schedule.seed, 0xD0);
  const std::uint64_t seed_dbow = derive_seed(schedule.seed, 0xDB);

  PVModel dm = init_model(config_dm, vocab, huffman, corpus.size(), seed_dm);
  PVModel dbow = init_model(config_dbow, vocab, huffman, corpus.size(), seed_dbow);
  TrainSchedule s_dm = schedule;
  s_dm.seed = seed_dm;
  TrainSchedule s_dbow = schedule;
  s_dbow.seed = seed_dbow;
  TrainReport r_dm = train(dm, corpus, s_dm);
  TrainReport r_dbow = train(dbow, corpus, s_dbow);
  if (reports != nullptr) *reports = {std::move(r_dm), std::move(r_dbow)};
  return {std::move(dm), std::move(dbow)};
}

}  // namespace paravec
