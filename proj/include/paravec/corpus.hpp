#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace paravec {

using WordId = std::int32_t;
using Document = std::vector<std::string>;

struct TokenizerOptions {
  bool lowercase = true;
  /// Characters split off into tokens of their own.
  std::string punctuation = ",.!?;:()\"'";
};

/// Splits on whitespace (and ASCII control characters), lowercases ASCII
/// letters, and detaches each punctuation character as a separate token.
/// Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

/// Word inventory. Position 0 is the NULL padding symbol; real words follow
/// in descending count, ties by ascending surface.
class Vocabulary {
 public:
  static constexpr WordId kNull = 0;
  static constexpr std::string_view kNullSurface = "<null>";

  struct Entry {
    std::string surface;
    std::uint64_t count = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Vocabulary();
  /// Rebuilds a vocabulary from a position-ordered entry list (position 0
  /// must be the NULL entry). Validates the ordering invariant.
  static Vocabulary from_entries(std::vector<Entry> entries);

  /// Number of positions including NULL.
  std::size_t size() const noexcept { return entries_.size(); }
  /// Number of real (non-NULL) words.
  std::size_t word_count() const noexcept { return entries_.size() - 1; }

  const Entry& entry(WordId id) const { return entries_.at(static_cast<std::size_t>(id)); }
  const std::string& surface(WordId id) const { return entry(id).surface; }
  std::uint64_t count(WordId id) const { return entry(id).count; }
  std::span<const Entry> entries() const noexcept { return entries_; }

  std::optional<WordId> find(std::string_view surface) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, WordId> index_;
};

/// Counts tokens over all documents and keeps those with count >= min_count.
/// Throws kAllTokensPruned when nothing survives.
Vocabulary build_vocab(std::span<const Document> docs, std::uint64_t min_count);

/// `surface<TAB>count` per line in position order, NULL included.
void write_vocab_dump(std::ostream& out, const Vocabulary& vocab);

/// Binary Huffman codes over the real words of a vocabulary. Index w-1 of
/// `codes`/`paths` belongs to word position w. Internal nodes are numbered
/// in creation order; the root is node internal_nodes-1 and every path
/// starts at the root.
struct HuffmanCoding {
  std::vector<std::vector<std::uint8_t>> codes;
  std::vector<std::vector<std::int32_t>> paths;
  std::size_t internal_nodes = 0;

  std::span<const std::uint8_t> code(WordId word) const {
    return codes[static_cast<std::size_t>(word) - 1];
  }
  std::span<const std::int32_t> path(WordId word) const {
    return paths[static_cast<std::size_t>(word) - 1];
  }

  friend bool operator==(const HuffmanCoding&, const HuffmanCoding&) = default;
};

/// Repeatedly merges the two lowest-count nodes; ties go to the node created
/// first (leaves precede internal nodes, leaves in vocabulary order). The
/// first node popped becomes the left child and emits bit 0.
HuffmanCoding build_huffman(const Vocabulary& vocab);

struct Corpus {
  std::vector<std::vector<WordId>> documents;
  std::optional<std::vector<int>> labels;

  std::size_t size() const noexcept { return documents.size(); }
  std::size_t token_count() const noexcept;
};

/// Out-of-vocabulary tokens are dropped. Documents that end up empty are
/// kept so that paragraph ids stay positional.
Corpus encode_corpus(std::span<const Document> docs, const Vocabulary& vocab);
std::vector<WordId> encode_document(const Document& doc, const Vocabulary& vocab);

/// One document per line.
std::vector<Document> read_documents(std::istream& in, const TokenizerOptions& options = {});
/// One integer label per line.
std::vector<int> read_labels(std::istream& in);

}  // namespace paravec
