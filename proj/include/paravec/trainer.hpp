#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "paravec/corpus.hpp"
#include "paravec/model.hpp"

namespace paravec {

/// One window per token (every token is a target exactly once). Context
/// positions before the start of the document, or past its end in symmetric
/// mode, are filled with NULL.
std::vector<ContextWindow> enumerate_windows(std::span<const WordId> doc, int window,
                                             std::int32_t paragraph = 0, bool symmetric = false);

/// Writes the window for target position `t` into `ctx` without allocating.
void fill_window(std::span<const WordId> doc, std::size_t t, int window, bool symmetric,
                 ContextWindow& ctx);

/// PV-DBOW target: uniform over the real (non-NULL) tokens of the window,
/// context plus the token at the window position.
WordId sample_window_word(const ContextWindow& ctx, std::mt19937_64& rng);

struct TrainSchedule {
  int epochs = 10;
  double lr_start = 0.025;
  double lr_min = 1e-4;
  int workers = 1;
  std::uint64_t seed = 1;
  bool shuffle = true;
  /// Draw windows at random (document, then position) instead of sweeping
  /// every position once per epoch.
  bool sample_windows = false;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t windows = 0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t windows_processed = 0;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Learning rate after `processed` of `planned` windows.
double interpolate_lr(double lr_start, double lr_min, std::size_t processed, std::size_t planned);

/// Deterministic for workers == 1. With more workers, documents are sharded
/// and all workers update the shared model without locks.
TrainReport train(PVModel& model, const Corpus& corpus, const TrainSchedule& schedule,
                  const EpochCallback& on_epoch = {});

/// Trains a PV-DM and a PV-DBOW model on the same corpus with seeds derived
/// from schedule.seed.
std::pair<PVModel, PVModel> train_pair(const Corpus& corpus, const Vocabulary& vocab,
                                       const ModelConfig& config_dm,
                                       const ModelConfig& config_dbow,
                                       const TrainSchedule& schedule,
                                       std::pair<TrainReport, TrainReport>* reports = nullptr);

/// splitmix64 over (seed, stream); used wherever a sub-seed is needed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace paravec
