#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "paravec/corpus.hpp"
#include "paravec/error.hpp"

using namespace paravec;
using Tokens = std::vector<std::string>;

TEST_CASE("tokenize detaches punctuation and lowercases") {
  CHECK(tokenize("The cat sat.") == Tokens{"the", "cat", "sat", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a  b\tc") == Tokens{"a", "b", "c"});
  CHECK(tokenize("(Hi), \"you\"; ok?!") ==
        Tokens{"(", "hi", ")", ",", "\"", "you", "\"", ";", "ok", "?", "!"});
  CHECK(tokenize("don't") == Tokens{"don", "'", "t"});
}

TEST_CASE("tokenize options") {
  TokenizerOptions keep;
  keep.lowercase = false;
  CHECK(tokenize("The Cat", keep) == Tokens{"The", "Cat"});
  TokenizerOptions none;
  none.punctuation.clear();
  CHECK(tokenize("a.b c!", none) == Tokens{"a.b", "c!"});
  // Non-ASCII bytes are left alone and are not separators.
  CHECK(tokenize("Caf\xc3\xa9 NA\xc3\xaf" "VE") == Tokens{"caf\xc3\xa9", "na\xc3\xafve"});
}

TEST_CASE("tokenize is idempotent on its joined output") {
  std::mt19937_64 rng(5);
  const std::string alphabet = "abcXYZ .,!?;:()\"'\t\n";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += alphabet[pick(rng)];
    const Tokens once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
    for (const auto& t : once) {
      CHECK(!t.empty());
      CHECK(t.find_first_of(" \t\n") == std::string::npos);
    }
  }
}

TEST_CASE("build_vocab counts, orders and prunes") {
  const std::vector<Document> docs{{"a", "b", "a"}, {"a", "c"}};
  const Vocabulary v = build_vocab(docs, 1);
  REQUIRE(v.size() == 4);
  CHECK(v.word_count() == 3);
  CHECK(v.surface(0) == Vocabulary::kNullSurface);
  CHECK(v.count(0) == 0);
  CHECK(v.surface(1) == "a");
  CHECK(v.count(1) == 3);
  CHECK(v.surface(2) == "b");
  CHECK(v.surface(3) == "c");
  CHECK(*v.find("a") == 1);
  CHECK(!v.find("zz"));
  CHECK(!v.find(Vocabulary::kNullSurface));

  const Vocabulary pruned = build_vocab(std::vector<Document>{{"a", "b", "a"}}, 2);
  CHECK(pruned.word_count() == 1);
  CHECK(pruned.surface(1) == "a");

  CHECK(helpers::error_code([] { build_vocab(std::vector<Document>{{"x"}}, 5); }) ==
        ErrorCode::kAllTokensPruned);
}

TEST_CASE("vocabulary dump and from_entries validation") {
  const Vocabulary v = build_vocab(std::vector<Document>{{"b", "a", "b"}}, 1);
  std::ostringstream out;
  write_vocab_dump(out, v);
  CHECK(out.str() == "<null>\t0\nb\t2\na\t1\n");

  CHECK(helpers::error_code([] {
          Vocabulary::from_entries({{"<null>", 0}, {"a", 1}, {"b", 2}});
        }) == ErrorCode::kInvalidArgument);
  CHECK(helpers::error_code([] {
          Vocabulary::from_entries({{"<null>", 0}, {"b", 1}, {"a", 1}});
        }) == ErrorCode::kInvalidArgument);
  CHECK(helpers::error_code([] {
          Vocabulary::from_entries({{"<null>", 0}, {"a", 2}, {"a", 1}});
        }) == ErrorCode::kInvalidArgument);
  CHECK(Vocabulary::from_entries({{"<null>", 0}, {"a", 1}, {"b", 1}}) ==
        build_vocab(std::vector<Document>{{"b", "a"}}, 1));
}

TEST_CASE("huffman worked example is optimal") {
  const std::vector<std::uint64_t> counts{4, 2, 1, 1};
  const Vocabulary v = oracle::vocab_from_counts(counts);
  const HuffmanCoding h = build_huffman(v);
  CHECK(h.code(1).size() == 1);
  CHECK(h.code(2).size() == 2);
  CHECK(h.code(3).size() == 3);
  CHECK(h.code(4).size() == 3);
  CHECK(h.internal_nodes == 3);
  CHECK(oracle::weighted_length(v, h) == oracle::brute_force_optimal_length(counts));
}

TEST_CASE("huffman degenerate vocabularies") {
  const HuffmanCoding one = build_huffman(oracle::vocab_from_counts({7}));
  CHECK(one.code(1).empty());
  CHECK(one.path(1).empty());
  CHECK(one.internal_nodes == 0);

  const HuffmanCoding two = build_huffman(oracle::vocab_from_counts({1, 1}));
  CHECK(two.internal_nodes == 1);
  CHECK(two.code(1).size() == 1);
  CHECK(two.code(2).size() == 1);
  CHECK(two.code(1)[0] != two.code(2)[0]);
}

TEST_CASE("huffman tie rule: first popped is the left child") {
  // Leaves a and b (equal counts) merge first, a popped first -> bit 0.
  const HuffmanCoding h = build_huffman(oracle::vocab_from_counts({1, 1}));
  CHECK(h.code(1)[0] == 0);
  CHECK(h.code(2)[0] == 1);
  CHECK(h.path(1)[0] == 0);
}

TEST_CASE("huffman matches brute-force optimum on small random profiles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<std::size_t> n(1, 6);
    std::uniform_int_distribution<std::uint64_t> c(1, 9);
    std::vector<std::uint64_t> counts(n(rng));
    for (auto& x : counts) x = c(rng);
    const Vocabulary v = oracle::vocab_from_counts(counts);
    const HuffmanCoding h = build_huffman(v);
    CHECK(oracle::weighted_length(v, h) == oracle::brute_force_optimal_length(counts));
  }
}

TEST_CASE("huffman structural properties on random profiles") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::size_t> n(2, 300);
    const Vocabulary v = oracle::random_vocab(rng, n(rng), trial % 2 ? 5 : 10000);
    const HuffmanCoding h = build_huffman(v);
    CHECK(h.internal_nodes == v.word_count() - 1);
    CHECK(oracle::prefix_free(h));
    CHECK(oracle::kraft_equality(h));
    CHECK(oracle::length_monotone(v, h));
    for (std::size_t w = 0; w < h.codes.size(); ++w) {
      CHECK(h.paths[w].size() == h.codes[w].size());
      CHECK(h.paths[w].front() == static_cast<std::int32_t>(h.internal_nodes - 1));
      for (auto node : h.paths[w]) CHECK(node < static_cast<std::int32_t>(h.internal_nodes));
    }
  }
}

TEST_CASE("huffman is deterministic") {
  std::mt19937_64 rng(8);
  const Vocabulary v = oracle::random_vocab(rng, 100, 3);
  CHECK(build_huffman(v) == build_huffman(v));
}

TEST_CASE("encode_corpus drops OOV tokens and keeps positions") {
  const Vocabulary v = build_vocab(std::vector<Document>{{"a", "b"}}, 1);
  const std::vector<Document> docs{{"a", "zz", "b"}, {}, {"a"}, {"a"}, {"zz"}};
  const Corpus c = encode_corpus(docs, v);
  REQUIRE(c.size() == 5);
  CHECK(c.documents[0] == std::vector<WordId>{*v.find("a"), *v.find("b")});
  CHECK(c.documents[1].empty());
  CHECK(c.documents[2] == c.documents[3]);
  CHECK(c.documents[4].empty());
  CHECK(c.token_count() == 4);
  for (const auto& d : c.documents) {
    for (WordId w : d) CHECK(w != Vocabulary::kNull);
  }
}

TEST_CASE("encode then decode is the identity on known tokens") {
  const std::vector<Document> docs{tokenize("the quick brown fox jumps over the lazy dog .")};
  const Vocabulary v = build_vocab(docs, 1);
  const auto ids = encode_document(docs[0], v);
  Document back;
  for (WordId w : ids) back.push_back(v.surface(w));
  CHECK(back == docs[0]);
}

TEST_CASE("reading documents and labels") {
  std::istringstream text("Hello world.\n\nSecond line\n");
  const auto docs = read_documents(text);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0] == Tokens{"hello", "world", "."});
  CHECK(docs[1].empty());

  std::istringstream labels("1\n0\n\n 2 \n");
  CHECK(read_labels(labels) == std::vector<int>{1, 0, 2});
  std::istringstream bad("1\nx\n");
  CHECK(helpers::error_code([&] { read_labels(bad); }) == ErrorCode::kInvalidArgument);
}
