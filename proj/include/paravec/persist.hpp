#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "paravec/matrix.hpp"
#include "paravec/model.hpp"

namespace paravec {

// Model file layout:
//   paravec-model v1\n
//   meta <n>\n <n bytes of JSON: config, vocab_size, paragraphs, vocab> \n
//   <name> <rows> <cols>\n <rows*cols little-endian float32>   for W, D, then
//   out_nodes (hierarchical) or U and b (full softmax).
// The Huffman tree is rebuilt from the vocabulary counts on load.

inline constexpr std::string_view kModelMagic = "paravec-model";
inline constexpr std::string_view kModelVersion = "v1";

void save_model(const PVModel& model, std::ostream& out);
void save_model(const PVModel& model, const std::filesystem::path& path);
/// Throws kCorruptModel (with byte offset) or kVersionMismatch.
PVModel load_model(std::istream& in);
PVModel load_model(const std::filesystem::path& path);

/// Raw bytes of the parameter arrays, in file order.
std::string serialize_parameters(const ModelParams<float>& params, OutputLayer layer);
/// Same, restricted to the arrays inference must not touch (W, output, b).
std::string serialize_frozen_parameters(const ModelParams<float>& params, OutputLayer layer);

/// Header fields of a model file, as stored.
std::string inspect_model(const std::filesystem::path& path);

// Vector file: "paravec-vec v1 <rows> <cols>\n" then row-major little-endian
// float32.
void write_vectors(std::ostream& out, const Matrix<float>& vectors);
void write_vectors(const std::filesystem::path& path, const Matrix<float>& vectors);
Matrix<float> read_vectors(std::istream& in);
Matrix<float> read_vectors(const std::filesystem::path& path);

enum class Space { kWords, kParagraphs };

struct Neighbor {
  std::size_t id = 0;
  double similarity = 0.0;
};

/// Top-k rows of the chosen table by cosine similarity, sorted by
/// similarity then ascending id. The NULL word is never returned; ids in
/// `exclude` are skipped.
std::vector<Neighbor> nearest(const PVModel& model, std::span<const float> query, std::size_t k,
                              Space space, std::span<const std::size_t> exclude = {});

/// Neighbors of a vocabulary word, excluding the word itself. Throws
/// kUnknownWord.
std::vector<Neighbor> nearest_word(const PVModel& model, const std::string& word, std::size_t k);

/// Words closest to vec(b) - vec(a) + vec(c), excluding a, b and c.
std::vector<Neighbor> analogy(const PVModel& model, const std::string& a, const std::string& b,
                              const std::string& c, std::size_t k);

}  // namespace paravec
