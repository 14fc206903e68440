#include "paravec/corpus.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <tuple>

#include "paravec/error.hpp"

namespace paravec {

namespace {

bool is_separator(unsigned char c) { return c <= 0x20 || c == 0x7f; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_separator(c)) {
      flush();
    } else if (options.punctuation.find(ch) != std::string::npos) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(options.lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : ch);
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary() {
  entries_.push_back({std::string(kNullSurface), 0});
  index_.emplace(entries_.front().surface, kNull);
}

Vocabulary Vocabulary::from_entries(std::vector<Entry> entries) {
  if (entries.empty() || entries.front().surface != kNullSurface || entries.front().count != 0) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary must start with the NULL entry");
  }
  Vocabulary vocab;
  vocab.entries_ = std::move(entries);
  vocab.index_.clear();
  for (std::size_t i = 0; i < vocab.entries_.size(); ++i) {
    const Entry& e = vocab.entries_[i];
    if (i > 1) {
      const Entry& prev = vocab.entries_[i - 1];
      if (std::tie(e.count, prev.surface) > std::tie(prev.count, e.surface)) {
        throw Error(ErrorCode::kInvalidArgument, "vocabulary entries out of order at " + e.surface);
      }
    }
    if (e.surface.empty() || !vocab.index_.emplace(e.surface, static_cast<WordId>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate or empty surface in vocabulary");
    }
  }
  return vocab;
}

std::optional<WordId> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end() || it->second == kNull) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(std::span<const Document> docs, std::uint64_t min_count) {
  if (min_count == 0) throw Error(ErrorCode::kInvalidArgument, "min_count must be positive");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const Document& doc : docs) {
    for (const std::string& token : doc) ++counts[token];
  }
  std::vector<Vocabulary::Entry> entries;
  entries.push_back({std::string(Vocabulary::kNullSurface), 0});
  for (auto& [surface, count] : counts) {
    if (count >= min_count && surface != Vocabulary::kNullSurface) entries.push_back({surface, count});
  }
  if (entries.size() == 1) {
    throw Error(ErrorCode::kAllTokensPruned,
                "no token reaches min_count=" + std::to_string(min_count));
  }
  std::sort(entries.begin() + 1, entries.end(), [](const auto& a, const auto& b) {
    return a.count != b.count ? a.count > b.count : a.surface < b.surface;
  });
  return Vocabulary::from_entries(std::move(entries));
}

void write_vocab_dump(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& e : vocab.entries()) out << e.surface << '\t' << e.count << '\n';
}

HuffmanCoding build_huffman(const Vocabulary& vocab) {
  const std::size_t leaves = vocab.word_count();
  if (leaves == 0) throw Error(ErrorCode::kInvalidArgument, "huffman needs at least one word");

  HuffmanCoding out;
  out.codes.resize(leaves);
  out.paths.resize(leaves);
  out.internal_nodes = leaves - 1;
  if (leaves == 1) return out;

  // Nodes 0..leaves-1 are leaves, the rest internal in creation order.
  const std::size_t total = 2 * leaves - 1;
  std::vector<std::size_t> parent(total, 0);
  std::vector<std::uint8_t> bit(total, 0);

  using Item = std::pair<std::uint64_t, std::size_t>;  // (count, creation index)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < leaves; ++i) {
    heap.emplace(vocab.count(static_cast<WordId>(i + 1)), i);
  }
  for (std::size_t next = leaves; next < total; ++next) {
    const Item left = heap.top();
    heap.pop();
    const Item right = heap.top();
    heap.pop();
    parent[left.second] = next;
    parent[right.second] = next;
    bit[left.second] = 0;
    bit[right.second] = 1;
    heap.emplace(left.first + right.first, next);
  }

  const std::size_t root = total - 1;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    auto& code = out.codes[leaf];
    auto& path = out.paths[leaf];
    for (std::size_t node = leaf; node != root; node = parent[node]) {
      code.push_back(bit[node]);
      path.push_back(static_cast<std::int32_t>(parent[node] - leaves));
    }
    std::reverse(code.begin(), code.end());
    std::reverse(path.begin(), path.end());
  }
  return out;
}

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

std::vector<WordId> encode_document(const Document& doc, const Vocabulary& vocab) {
  std::vector<WordId> ids;
  ids.reserve(doc.size());
  for (const std::string& token : doc) {
    if (auto id = vocab.find(token)) ids.push_back(*id);
  }
  return ids;
}

Corpus encode_corpus(std::span<const Document> docs, const Vocabulary& vocab) {
  Corpus corpus;
  corpus.documents.reserve(docs.size());
  for (const Document& doc : docs) corpus.documents.push_back(encode_document(doc, vocab));
  return corpus;
}

std::vector<Document> read_documents(std::istream& in, const TokenizerOptions& options) {
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) docs.push_back(tokenize(line, options));
  return docs;
}

std::vector<int> read_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad label on line " + std::to_string(line_no));
    }
  }
  return labels;
}

}  // namespace paravec
