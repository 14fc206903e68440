#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "paravec/persist.hpp"
#include "paravec/retrieval.hpp"
#include "paravec/trainer.hpp"

using namespace paravec;

namespace {

std::vector<Document> small_docs() {
  return {{"the", "cat", "sat", "on", "the", "mat"}, {"a", "dog", "sat"}, {"the", "dog", "ran"}};
}

PVModel small_model(const ModelConfig& config, std::uint64_t seed = 1) {
  const auto docs = small_docs();
  const Vocabulary v = build_vocab(docs, 1);
  PVModel m = init_model(config, v, build_huffman(v), docs.size(), seed);
  TrainSchedule s;
  s.epochs = 3;
  train(m, encode_corpus(docs, v), s);
  return m;
}

std::string to_bytes(const PVModel& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

PVModel from_bytes(const std::string& bytes) {
  std::istringstream in(bytes);
  return load_model(in);
}

std::optional<std::uint64_t> corrupt_offset(const std::string& bytes) {
  try {
    from_bytes(bytes);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptModel) return e.byte_offset();
  }
  return std::nullopt;
}

std::vector<ModelConfig> all_configs() {
  std::vector<ModelConfig> out;
  for (Mode mode : {Mode::kDistributedMemory, Mode::kDistributedBagOfWords, Mode::kWordOnly}) {
    for (Composition comp : {Composition::kConcat, Composition::kAverage}) {
      for (OutputLayer layer : {OutputLayer::kHierarchical, OutputLayer::kFull}) {
        for (bool bias : {true, false}) {
          for (bool symmetric : {false, true}) {
            ModelConfig c;
            c.dim_word = c.dim_para = 3;
            c.window = symmetric ? 5 : 4;
            c.mode = mode;
            c.composition = comp;
            c.output_layer = layer;
            c.use_bias = bias;
            c.symmetric = symmetric;
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("save/load/save is byte-exact for every configuration") {
  for (const ModelConfig& c : all_configs()) {
    const PVModel m = small_model(c);
    const std::string bytes = to_bytes(m);
    const PVModel back = from_bytes(bytes);
    CHECK(back.config == m.config);
    CHECK(back.vocab == m.vocab);
    CHECK(back.huffman == m.huffman);
    CHECK(back.params.words == m.params.words);
    CHECK(back.params.paragraphs == m.params.paragraphs);
    CHECK(back.params.output == m.params.output);
    CHECK(back.params.bias == m.params.bias);
    CHECK(to_bytes(back) == bytes);
  }
}

TEST_CASE("file layout") {
  ModelConfig c;
  c.dim_word = c.dim_para = 2;
  c.window = 3;
  c.output_layer = OutputLayer::kFull;
  const PVModel m = small_model(c);
  const std::string bytes = to_bytes(m);
  CHECK(bytes.rfind("paravec-model v1\nmeta ", 0) == 0);
  const std::size_t w = bytes.find("\nW 9 2\n");
  const std::size_t d = bytes.find("D 3 2\n");
  const std::size_t u = bytes.find("U 8 6\n");
  const std::size_t b = bytes.find("b 8 1\n");
  REQUIRE(w != std::string::npos);
  CHECK(d == w + 7 + 9 * 2 * 4);
  CHECK(u == d + 6 + 3 * 2 * 4);
  CHECK(b == u + 6 + 8 * 6 * 4);
  CHECK(bytes.size() == b + 6 + 8 * 4);
}

TEST_CASE("truncated and damaged files are reported with an offset") {
  ModelConfig c;
  c.dim_word = c.dim_para = 3;
  c.window = 3;
  const std::string bytes = to_bytes(small_model(c));
  CHECK(corrupt_offset(""));
  for (std::size_t len = 1; len < bytes.size(); len += 7) {
    CAPTURE(len);
    const auto offset = corrupt_offset(bytes.substr(0, len));
    REQUIRE(offset);
    CHECK(*offset <= len);
  }
  CHECK(corrupt_offset(bytes + "x"));
  CHECK(corrupt_offset("not a model\n"));

  // Vocabulary size in the metadata disagrees with the W block.
  std::string wrong_m = bytes;
  const std::size_t w = wrong_m.find("\nW ");
  wrong_m.replace(w, 4, "\nW 7");
  CHECK(corrupt_offset(wrong_m));
}

TEST_CASE("other versions are refused") {
  ModelConfig c;
  c.dim_word = c.dim_para = 3;
  c.window = 3;
  std::string bytes = to_bytes(small_model(c));
  bytes.replace(bytes.find("v1"), 2, "v2");
  CHECK(helpers::error_code([&] { from_bytes(bytes); }) == ErrorCode::kVersionMismatch);
}

TEST_CASE("frozen parameter bytes cover everything but D") {
  ModelConfig c;
  c.dim_word = c.dim_para = 3;
  c.window = 3;
  c.output_layer = OutputLayer::kFull;
  PVModel m = small_model(c);
  const std::string frozen = serialize_frozen_parameters(m.params, c.output_layer);
  m.params.paragraphs(0, 0) += 1;
  CHECK(serialize_frozen_parameters(m.params, c.output_layer) == frozen);
  m.params.bias[0] += 1;
  CHECK(serialize_frozen_parameters(m.params, c.output_layer) != frozen);
}

TEST_CASE("files on disk and inspect") {
  const auto dir = std::filesystem::temp_directory_path() / "paravec_persist_test";
  std::filesystem::create_directories(dir);
  ModelConfig c;
  c.dim_word = c.dim_para = 3;
  c.window = 3;
  const PVModel m = small_model(c);
  save_model(m, dir / "m.bin");
  CHECK(to_bytes(load_model(dir / "m.bin")) == to_bytes(m));
  const std::string info = inspect_model(dir / "m.bin");
  CHECK(info.find("mode\tpv-dm") != std::string::npos);
  CHECK(info.find("vocab_size\t9") != std::string::npos);
  CHECK(info.find("block\tW\t9x3") != std::string::npos);
  CHECK(helpers::error_code([&] { load_model(dir / "missing.bin"); }) == ErrorCode::kIo);

  Matrix<float> v(3, 2);
  v(2, 1) = 1.5f;
  write_vectors(dir / "v.f32", v);
  CHECK(read_vectors(dir / "v.f32") == v);
  std::filesystem::remove_all(dir);
}

TEST_CASE("vector files") {
  Matrix<float> v(2, 3);
  for (std::size_t i = 0; i < v.size(); ++i) v.flat()[i] = static_cast<float>(i) * 0.5f - 1;
  std::stringstream io;
  write_vectors(io, v);
  const std::string bytes = io.str();
  CHECK(bytes.rfind("paravec-vec v1 2 3\n", 0) == 0);
  CHECK(bytes.size() == 19 + 6 * 4);
  CHECK(read_vectors(io) == v);
  std::istringstream short_payload(bytes.substr(0, bytes.size() - 1));
  CHECK(helpers::error_code([&] { read_vectors(short_payload); }) == ErrorCode::kCorruptModel);
  std::istringstream long_payload(bytes + "abcd");
  CHECK(helpers::error_code([&] { read_vectors(long_payload); }) == ErrorCode::kCorruptModel);
}

TEST_CASE("nearest neighbours") {
  ModelConfig c;
  c.dim_word = c.dim_para = 4;
  c.window = 3;
  PVModel m = small_model(c);
  const auto cat = static_cast<std::size_t>(*m.vocab.find("cat"));
  const auto dog = static_cast<std::size_t>(*m.vocab.find("dog"));

  const auto self = nearest(m, m.params.words.row(cat), 3, Space::kWords);
  REQUIRE(self.size() == 3);
  CHECK(self[0].id == cat);
  CHECK(self[0].similarity == doctest::Approx(1.0));

  // A duplicate of the query row ranks first once the word itself is excluded.
  std::ranges::copy(m.params.words.row(cat), m.params.words.row(dog).begin());
  const std::size_t skip[] = {cat};
  const auto dup = nearest(m, m.params.words.row(cat), 2, Space::kWords, skip);
  CHECK(dup[0].id == dog);
  CHECK(dup[0].similarity == doctest::Approx(1.0));

  const auto all = nearest(m, m.params.words.row(cat), 1000, Space::kWords);
  CHECK(all.size() == m.vocab.word_count());
  for (const Neighbor& n : all) CHECK(n.id != 0);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].similarity >= all[i].similarity);
    if (all[i - 1].similarity == all[i].similarity) CHECK(all[i - 1].id < all[i].id);
  }

  const auto by_word = nearest_word(m, "cat", 1000);
  CHECK(by_word.size() == m.vocab.word_count() - 1);
  CHECK(by_word[0].id == dog);

  const auto paras = nearest(m, m.params.paragraphs.row(1), 10, Space::kParagraphs);
  CHECK(paras.size() == 3);
  CHECK(paras[0].id == 1);

  CHECK(helpers::error_code([&] { nearest_word(m, "zebra", 3); }) == ErrorCode::kUnknownWord);
  CHECK(helpers::error_code([&] { nearest(m, m.params.words.row(cat), 0, Space::kWords); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("analogy") {
  ModelConfig c;
  c.dim_word = c.dim_para = 4;
  c.window = 3;
  const PVModel m = small_model(c);
  // a = b collapses to neighbours of c.
  const auto r = analogy(m, "cat", "cat", "dog", 4);
  const auto cat = static_cast<std::size_t>(*m.vocab.find("cat"));
  const auto dog = static_cast<std::size_t>(*m.vocab.find("dog"));
  const std::size_t skip[] = {cat, dog};
  const auto expected = nearest(m, m.params.words.row(dog), 4, Space::kWords, skip);
  REQUIRE(r.size() == expected.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].id == expected[i].id);
    CHECK(r[i].similarity == doctest::Approx(expected[i].similarity));
  }
  CHECK(helpers::error_code([&] { analogy(m, "cat", "zebra", "dog", 3); }) ==
        ErrorCode::kUnknownWord);
}

TEST_CASE("topic words neighbour their own topic") {
  SynthOptions o;
  o.n_topics = 2;
  o.docs_per_topic = 100;
  o.vocab_per_topic = 15;
  o.noise = 0.2;
  o.seed = 3;
  const SynthData d = synth_triplets(o);
  const Vocabulary v = build_vocab(d.docs, 1);
  ModelConfig c;
  c.dim_word = c.dim_para = 16;
  c.window = 5;
  c.mode = Mode::kWordOnly;
  PVModel m = init_model(c, v, build_huffman(v), d.docs.size(), 2);
  TrainSchedule s;
  s.epochs = 20;
  train(m, encode_corpus(d.docs, v), s);
  std::size_t same = 0, total = 0;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 15; ++j) {
      const std::string prefix = "t" + std::to_string(k) + "w";
      for (const Neighbor& n : nearest_word(m, prefix + std::to_string(j), 5)) {
        same += m.vocab.surface(static_cast<WordId>(n.id)).rfind(prefix, 0) == 0;
        ++total;
      }
    }
  }
  CHECK(static_cast<double>(same) >= 0.8 * static_cast<double>(total));
}
