#include "paravec/persist.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "paravec/error.hpp"
#include "paravec/simd/kernels.hpp"

namespace paravec {

namespace {

using nlohmann::json;

void append_floats(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * sizeof(float));
  char* dst = out.data() + start;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, values.data(), values.size() * sizeof(float));
  } else {
    for (float v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) *dst++ = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
}

void read_floats(const char* src, std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), src, out.size() * sizeof(float));
  } else {
    for (float& v : out) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(*src++)) << (8 * b);
      }
      v = std::bit_cast<float>(bits);
    }
  }
}

void append_block(std::string& out, std::string_view name, std::size_t rows, std::size_t cols,
                  std::span<const float> data) {
  out += std::string(name) + ' ' + std::to_string(rows) + ' ' + std::to_string(cols) + '\n';
  append_floats(out, data);
}

json config_to_json(const ModelConfig& c) {
  return json{{"dim_word", c.dim_word},
              {"dim_para", c.dim_para},
              {"window", c.window},
              {"mode", to_string(c.mode)},
              {"composition", to_string(c.composition)},
              {"output_layer", to_string(c.output_layer)},
              {"use_bias", c.use_bias},
              {"symmetric", c.symmetric}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.dim_word = j.at("dim_word").get<int>();
  c.dim_para = j.at("dim_para").get<int>();
  c.window = j.at("window").get<int>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.composition = parse_composition(j.at("composition").get<std::string>());
  c.output_layer = parse_output_layer(j.at("output_layer").get<std::string>());
  c.use_bias = j.at("use_bias").get<bool>();
  c.symmetric = j.at("symmetric").get<bool>();
  return c;
}

std::string encode_model(const PVModel& m) {
  json meta;
  meta["config"] = config_to_json(m.config);
  meta["vocab_size"] = m.vocab.size();
  meta["paragraphs"] = m.paragraph_count();
  json vocab = json::array();
  for (const auto& e : m.vocab.entries()) vocab.push_back(json::array({e.surface, e.count}));
  meta["vocab"] = std::move(vocab);
  const std::string meta_text = meta.dump();

  std::string out;
  out += std::string(kModelMagic) + ' ' + std::string(kModelVersion) + '\n';
  out += "meta " + std::to_string(meta_text.size()) + '\n';
  out += meta_text;
  out += '\n';
  out += serialize_parameters(m.params, m.config.output_layer);
  return out;
}

// Cursor over an in-memory file; every failure reports its byte offset.
class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kCorruptModel, what, pos_);
  }

  std::string_view line() {
    const std::size_t nl = data_.find('\n', pos_);
    if (nl == std::string::npos) fail("unterminated header line");
    std::string_view out(data_.data() + pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  std::string_view bytes(std::size_t n) {
    if (data_.size() - pos_ < n) fail("file truncated");
    std::string_view out(data_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  void expect(char c) {
    if (pos_ >= data_.size() || data_[pos_] != c) fail("unexpected byte");
    ++pos_;
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

std::size_t parse_count(std::string_view text, const Reader& r) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) r.fail("bad number");
  return value;
}

Matrix<float> read_block(Reader& r, std::string_view name, std::size_t rows, std::size_t cols) {
  const std::size_t at = r.offset();
  std::string_view header = r.line();
  std::istringstream fields{std::string(header)};
  std::string got_name, rows_text, cols_text, extra;
  fields >> got_name >> rows_text >> cols_text;
  if (got_name != name || (fields >> extra)) {
    throw Error(ErrorCode::kCorruptModel, "expected block '" + std::string(name) + "'", at);
  }
  if (parse_count(rows_text, r) != rows || parse_count(cols_text, r) != cols) {
    throw Error(ErrorCode::kCorruptModel,
                "block '" + std::string(name) + "' shape disagrees with metadata", at);
  }
  Matrix<float> m(rows, cols);
  read_floats(r.bytes(rows * cols * sizeof(float)).data(), m.flat());
  return m;
}

std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void check_header(Reader& r) {
  if (r.at_end()) r.fail("empty file");
  const std::string_view header = r.line();
  const std::string expected = std::string(kModelMagic) + ' ' + std::string(kModelVersion);
  if (header == expected) return;
  if (header.starts_with(std::string(kModelMagic) + ' ')) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported model version '" + std::string(header.substr(kModelMagic.size() + 1)) + "'");
  }
  throw Error(ErrorCode::kCorruptModel, "not a paravec model", 0);
}

json read_meta(Reader& r) {
  const std::string_view meta_line = r.line();
  if (!meta_line.starts_with("meta ")) r.fail("missing metadata block");
  const std::size_t n = parse_count(meta_line.substr(5), r);
  const std::size_t at = r.offset();
  const std::string_view text = r.bytes(n);
  r.expect('\n');
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptModel, std::string("bad metadata: ") + e.what(), at);
  }
}

}  // namespace

namespace {

void append_output(std::string& out, const ModelParams<float>& p, bool full_softmax) {
  if (!full_softmax) {
    append_block(out, "out_nodes", p.output.rows(), p.output.cols(), p.output.flat());
    return;
  }
  append_block(out, "U", p.output.rows(), p.output.cols(), p.output.flat());
  append_block(out, "b", p.bias.size(), 1, p.bias);
}

}  // namespace

std::string serialize_parameters(const ModelParams<float>& p, OutputLayer layer) {
  std::string out;
  append_block(out, "W", p.words.rows(), p.words.cols(), p.words.flat());
  append_block(out, "D", p.paragraphs.rows(), p.paragraphs.cols(), p.paragraphs.flat());
  append_output(out, p, layer == OutputLayer::kFull);
  return out;
}

std::string serialize_frozen_parameters(const ModelParams<float>& p, OutputLayer layer) {
  std::string out;
  append_block(out, "W", p.words.rows(), p.words.cols(), p.words.flat());
  append_output(out, p, layer == OutputLayer::kFull);
  return out;
}

void save_model(const PVModel& model, std::ostream& out) {
  const std::string bytes = encode_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

void save_model(const PVModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  save_model(model, out);
}

PVModel load_model(std::istream& in) {
  Reader r(slurp(in));
  check_header(r);
  const std::size_t meta_at = r.offset();
  const json meta = read_meta(r);

  PVModel model;
  std::size_t vocab_size = 0;
  std::size_t paragraphs = 0;
  try {
    model.config = config_from_json(meta.at("config"));
    validate(model.config);
    vocab_size = meta.at("vocab_size").get<std::size_t>();
    paragraphs = meta.at("paragraphs").get<std::size_t>();
    std::vector<Vocabulary::Entry> entries;
    for (const auto& e : meta.at("vocab")) {
      entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::uint64_t>()});
    }
    if (entries.size() != vocab_size) {
      throw Error(ErrorCode::kCorruptModel, "vocab_size disagrees with vocabulary entries", meta_at);
    }
    model.vocab = Vocabulary::from_entries(std::move(entries));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptModel, std::string("bad metadata: ") + e.what(), meta_at);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptModel) throw;
    throw Error(ErrorCode::kCorruptModel, e.what(), meta_at);
  }
  if (model.vocab.word_count() < 1) throw Error(ErrorCode::kCorruptModel, "empty vocabulary", meta_at);
  model.huffman = build_huffman(model.vocab);

  const ModelParams<float> shape = zero_params<float>(model.config, vocab_size, paragraphs);
  model.params.words = read_block(r, "W", shape.words.rows(), shape.words.cols());
  model.params.paragraphs = read_block(r, "D", shape.paragraphs.rows(), shape.paragraphs.cols());
  if (model.config.output_layer == OutputLayer::kHierarchical) {
    model.params.output = read_block(r, "out_nodes", shape.output.rows(), shape.output.cols());
  } else {
    model.params.output = read_block(r, "U", shape.output.rows(), shape.output.cols());
    const Matrix<float> b = read_block(r, "b", shape.bias.size(), 1);
    model.params.bias.assign(b.flat().begin(), b.flat().end());
  }
  if (!r.at_end()) r.fail("trailing bytes after payload");
  return model;
}

PVModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return load_model(in);
}

std::string inspect_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Reader r(slurp(in));
  check_header(r);
  json meta = read_meta(r);
  std::ostringstream out;
  out << "format\t" << kModelMagic << ' ' << kModelVersion << '\n';
  for (const auto& [key, value] : meta.at("config").items()) {
    out << key << '\t' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  out << "vocab_size\t" << meta.at("vocab_size").dump() << '\n';
  out << "paragraphs\t" << meta.at("paragraphs").dump() << '\n';
  while (!r.at_end()) {
    const std::string header(r.line());
    std::istringstream fields(header);
    std::string name, rows, cols;
    fields >> name >> rows >> cols;
    out << "block\t" << name << '\t' << rows << 'x' << cols << '\n';
    r.bytes(parse_count(rows, r) * parse_count(cols, r) * sizeof(float));
  }
  return out.str();
}

// ---------------------------------------------------------------------------

void write_vectors(std::ostream& out, const Matrix<float>& vectors) {
  std::string bytes = "paravec-vec v1 " + std::to_string(vectors.rows()) + ' ' +
                      std::to_string(vectors.cols()) + '\n';
  append_floats(bytes, vectors.flat());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

void write_vectors(const std::filesystem::path& path, const Matrix<float>& vectors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_vectors(out, vectors);
}

Matrix<float> read_vectors(std::istream& in) {
  Reader r(slurp(in));
  if (r.at_end()) r.fail("empty vector file");
  std::istringstream fields{std::string(r.line())};
  std::string magic, version, rows_text, cols_text, extra;
  fields >> magic >> version >> rows_text >> cols_text;
  if (magic != "paravec-vec" || (fields >> extra)) {
    throw Error(ErrorCode::kCorruptModel, "not a paravec vector file", 0);
  }
  if (version != "v1") throw Error(ErrorCode::kVersionMismatch, "unsupported vector file " + version);
  const std::size_t rows = parse_count(rows_text, r);
  const std::size_t cols = parse_count(cols_text, r);
  Matrix<float> m(rows, cols);
  read_floats(r.bytes(rows * cols * sizeof(float)).data(), m.flat());
  if (!r.at_end()) r.fail("payload longer than header says");
  return m;
}

Matrix<float> read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_vectors(in);
}

// ---------------------------------------------------------------------------

std::vector<Neighbor> nearest(const PVModel& model, std::span<const float> query, std::size_t k,
                              Space space, std::span<const std::size_t> exclude) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const Matrix<float>& table = space == Space::kWords ? model.params.words : model.params.paragraphs;
  if (query.size() != table.cols()) throw Error(ErrorCode::kInvalidArgument, "query dimension mismatch");
  const double qn = std::sqrt(simd::dot(query, query));
  std::vector<Neighbor> all;
  all.reserve(table.rows());
  for (std::size_t i = space == Space::kWords ? 1 : 0; i < table.rows(); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
    const auto row = table.row(i);
    const double rn = std::sqrt(simd::dot(row, row));
    const double sim = qn > 0 && rn > 0 ? simd::dot(query, row) / (qn * rn) : 0.0;
    all.push_back({i, sim});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
                    });
  all.resize(keep);
  return all;
}

namespace {

WordId require_word(const PVModel& model, const std::string& word) {
  if (auto id = model.vocab.find(word)) return *id;
  throw Error(ErrorCode::kUnknownWord, "'" + word + "' is not in the vocabulary");
}

}  // namespace

std::vector<Neighbor> nearest_word(const PVModel& model, const std::string& word, std::size_t k) {
  const auto id = static_cast<std::size_t>(require_word(model, word));
  const std::size_t exclude[] = {id};
  return nearest(model, model.params.words.row(id), k, Space::kWords, exclude);
}

std::vector<Neighbor> analogy(const PVModel& model, const std::string& a, const std::string& b,
                              const std::string& c, std::size_t k) {
  const auto ia = static_cast<std::size_t>(require_word(model, a));
  const auto ib = static_cast<std::size_t>(require_word(model, b));
  const auto ic = static_cast<std::size_t>(require_word(model, c));
  const std::size_t q = model.params.words.cols();
  std::vector<double> target(q, 0.0);
  simd::axpy(1.0, model.params.words.row(ib), std::span<double>(target));
  simd::axpy(-1.0, model.params.words.row(ia), std::span<double>(target));
  simd::axpy(1.0, model.params.words.row(ic), std::span<double>(target));
  std::vector<float> query(target.begin(), target.end());
  const std::size_t exclude[] = {ia, ib, ic};
  return nearest(model, query, k, Space::kWords, exclude);
}

}  // namespace paravec
