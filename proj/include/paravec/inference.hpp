#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "paravec/corpus.hpp"
#include "paravec/matrix.hpp"
#include "paravec/model.hpp"

namespace paravec {

struct InferenceSchedule {
  int steps = 50;  // passes over the document's windows
  double lr_start = 0.025;
  double lr_min = 1e-4;
  std::uint64_t seed = 1;
  /// Stop early once a pass improves the mean loss by less than `tolerance`.
  bool until_converged = false;
  double tolerance = 1e-4;
  /// Return a zero vector instead of throwing kEmptyAfterOov.
  bool zero_on_empty = false;
};

struct InferredVector {
  std::vector<float> vector;
  std::vector<double> pass_losses;  // mean loss of each completed pass
};

/// Fits a fresh paragraph vector for an unseen document by gradient descent
/// with every model parameter held fixed.
InferredVector infer_vector(const PVModel& model, const Document& tokens,
                            const InferenceSchedule& schedule);

/// Same, on an already encoded document.
InferredVector infer_encoded(const PVModel& model, std::span<const WordId> doc,
                             const InferenceSchedule& schedule);

struct BatchInference {
  Matrix<float> vectors;                 // docs x p, zero rows for empty docs
  std::vector<std::size_t> empty_docs;   // positions that hit kEmptyAfterOov
};

/// Seed used for document `position` of a batch.
std::uint64_t batch_seed(std::uint64_t seed, std::size_t position);

/// Independent inference per document; the result does not depend on the
/// worker count.
BatchInference infer_batch(const PVModel& model, std::span<const Document> docs,
                           const InferenceSchedule& schedule, int workers = 1);

}  // namespace paravec
