// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// model error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "paravec/classify.hpp"
#include "paravec/corpus.hpp"
#include "paravec/error.hpp"
#include "paravec/inference.hpp"
#include "paravec/model.hpp"
#include "paravec/persist.hpp"
#include "paravec/retrieval.hpp"
#include "paravec/trainer.hpp"

namespace fs = std::filesystem;
using namespace paravec;

namespace {

// Bad flag values that only surface after parsing still count as usage
// errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Document> load_documents(const std::string& path, const TokenizerOptions& tok) {
  if (path == "-") return read_documents(std::cin, tok);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_documents(in, tok);
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_labels(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

void check_config(const ModelConfig& config) {
  try {
    validate(config);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

template <typename F>
auto parse_enum(F parse, const std::string& text) {
  try {
    return parse(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void print_epoch(const EpochStats& s) {
  std::printf("%d\t%.6f\t%zu\t%.3f\n", s.epoch, s.mean_loss, s.windows, s.seconds);
  std::fflush(stdout);
}

struct TokenFlags {
  bool keep_case = false;
  TokenizerOptions options() const {
    TokenizerOptions t;
    t.lowercase = !keep_case;
    return t;
  }
};

struct ModelFlags {
  int dim_word = 100;
  int dim_para = 100;
  int window = 8;
  std::string composition = "concat";
  std::string output = "hierarchical";
  bool no_bias = false;
  bool symmetric = false;

  void add(CLI::App* app) {
    app->add_option("--dim-word", dim_word, "Word vector size q");
    app->add_option("--dim-para", dim_para, "Paragraph vector size p");
    app->add_option("--window", window, "Context words plus target");
    app->add_option("--composition", composition, "concat|average (PV-DM only)");
    app->add_option("--output-layer", output, "hierarchical|full");
    app->add_flag("--no-bias", no_bias, "Drop the full-softmax bias");
    app->add_flag("--symmetric", symmetric, "Take context from both sides of the target");
  }

  ModelConfig config(Mode mode) const {
    ModelConfig c;
    c.dim_word = dim_word;
    c.dim_para = dim_para;
    c.window = window;
    c.mode = mode;
    c.composition = parse_enum(parse_composition, composition);
    c.output_layer = parse_enum(parse_output_layer, output);
    c.use_bias = !no_bias;
    c.symmetric = symmetric;
    check_config(c);
    return c;
  }
};

struct ScheduleFlags {
  TrainSchedule s;
  void add(CLI::App* app) {
    app->add_option("--epochs", s.epochs, "Training epochs");
    app->add_option("--lr", s.lr_start, "Initial learning rate");
    app->add_option("--lr-min", s.lr_min, "Final learning rate");
    app->add_option("--workers", s.workers, "Training threads");
    app->add_option("--seed", s.seed, "Random seed");
    app->add_flag("--sample-windows", s.sample_windows, "Sample windows instead of sweeping");
  }
  const TrainSchedule& get() const {
    if (s.epochs < 0 || !(s.lr_start >= 0) || !(s.lr_min >= 0) || s.workers < 1) {
      throw UsageError("invalid training schedule");
    }
    return s;
  }
};

// --- verbs ------------------------------------------------------------------

struct BuildVocabCmd {
  std::string corpus, out;
  std::uint64_t min_count = 1;
  TokenFlags tok;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("build-vocab", "Count words and write the vocabulary dump");
    app->add_option("--corpus", corpus, "One document per line ('-' for stdin)")->required();
    app->add_option("--out", out, "Output file ('-' for stdout)")->required();
    app->add_option("--min-count", min_count, "Drop words seen fewer times");
    app->add_flag("--keep-case", tok.keep_case, "Do not lowercase");
    app->callback([this] { run(); });
  }

  void run() {
    const auto docs = load_documents(corpus, tok.options());
    const Vocabulary vocab = build_vocab(docs, min_count);
    if (out == "-") {
      write_vocab_dump(std::cout, vocab);
    } else {
      auto f = open_out(out);
      write_vocab_dump(f, vocab);
    }
  }
};

struct TrainCmd {
  std::string corpus, out, mode = "pv-dm";
  std::uint64_t min_count = 1;
  ModelFlags model;
  ScheduleFlags schedule;
  TokenFlags tok;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "Train a model; prints one line per epoch");
    app->add_option("--corpus", corpus, "One document per line ('-' for stdin)")->required();
    app->add_option("--out", out, "Model file (for 'both': <out>.dm and <out>.dbow)")->required();
    app->add_option("--mode", mode, "pv-dm|pv-dbow|word-only|both");
    app->add_option("--min-count", min_count, "Drop words seen fewer times");
    app->add_flag("--keep-case", tok.keep_case, "Do not lowercase");
    model.add(app);
    schedule.add(app);
    app->callback([this] { run(); });
  }

  void run() {
    const TrainSchedule& sched = schedule.get();
    const bool both = mode == "both";
    const ModelConfig first = model.config(both ? Mode::kDistributedMemory : parse_enum(parse_mode, mode));
    const auto docs = load_documents(corpus, tok.options());
    const Vocabulary vocab = build_vocab(docs, min_count);
    const Corpus enc = encode_corpus(docs, vocab);

    std::printf("epoch\tmean_loss\twindows\tseconds\n");
    if (!both) {
      PVModel m = init_model(first, vocab, build_huffman(vocab), enc.size(), sched.seed);
      train(m, enc, sched, print_epoch);
      save_model(m, fs::path(out));
      return;
    }
    ModelConfig dbow = first;
    dbow.mode = Mode::kDistributedBagOfWords;
    std::pair<TrainReport, TrainReport> reports;
    auto [dm, bow] = train_pair(enc, vocab, first, dbow, sched, &reports);
    for (const auto& s : reports.first.epochs) print_epoch(s);
    for (const auto& s : reports.second.epochs) print_epoch(s);
    save_model(dm, fs::path(out + ".dm"));
    save_model(bow, fs::path(out + ".dbow"));
  }
};

struct InferCmd {
  std::vector<std::string> models;
  std::string in, out;
  InferenceSchedule s;
  int workers = 1;
  TokenFlags tok;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("infer", "Infer paragraph vectors for new documents");
    app->add_option("--model", models, "Model file; repeat to concatenate vectors")->required();
    app->add_option("--in", in, "One document per line ('-' for stdin)")->required();
    app->add_option("--out", out, "Vector file")->required();
    app->add_option("--steps", s.steps, "Passes over each document");
    app->add_option("--lr", s.lr_start, "Initial learning rate");
    app->add_option("--lr-min", s.lr_min, "Final learning rate");
    app->add_option("--seed", s.seed, "Random seed");
    app->add_option("--workers", workers, "Inference threads");
    app->add_flag("--until-converged", s.until_converged, "Stop once the loss settles");
    app->add_option("--tolerance", s.tolerance, "Convergence threshold");
    app->add_flag("--keep-case", tok.keep_case, "Do not lowercase");
    app->callback([this] { run(); });
  }

  void run() {
    if (s.steps < 0 || !(s.lr_start >= 0) || workers < 1) throw UsageError("invalid inference options");
    s.zero_on_empty = true;
    const auto docs = load_documents(in, tok.options());
    Matrix<double> all(docs.size(), 0);
    for (const auto& path : models) {
      const PVModel m = load_model(fs::path(path));
      const BatchInference b = infer_batch(m, docs, s, workers);
      for (std::size_t i : b.empty_docs) {
        std::fprintf(stderr, "warning: document %zu has no known words; zero vector\n", i);
      }
      all = combine_features(all, to_double(b.vectors));
    }
    write_vectors(fs::path(out), all.cast<float>());
  }
};

struct ClassifyCmd {
  std::string train_vec, train_labels, test_vec, test_labels, out, model = "logreg";
  LogRegOptions lr_opts;
  MlpOptions mlp_opts;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("classify", "Train a classifier on vectors and report error rates");
    app->add_option("--train-vec", train_vec)->required();
    app->add_option("--train-labels", train_labels)->required();
    app->add_option("--test-vec", test_vec)->required();
    app->add_option("--test-labels", test_labels)->required();
    app->add_option("--out", out, "Report TSV ('-' for stdout)")->required();
    app->add_option("--model", model, "logreg|mlp");
    app->add_option("--epochs", lr_opts.epochs);
    app->add_option("--lr", lr_opts.lr);
    app->add_option("--l2", lr_opts.l2);
    app->add_option("--hidden", mlp_opts.hidden);
    app->add_option("--seed", lr_opts.seed);
    app->callback([this] { run(); });
  }

  static FeatureSet load(const std::string& vec, const std::string& labels) {
    FeatureSet f{to_double(read_vectors(fs::path(vec))), load_labels(labels)};
    if (f.x.rows() != f.labels.size()) {
      throw Error(ErrorCode::kInvalidArgument, vec + " and " + labels + " differ in length");
    }
    return f;
  }

  void run() {
    if (model != "logreg" && model != "mlp") throw UsageError("unknown classifier " + model);
    const FeatureSet train = load(train_vec, train_labels);
    const FeatureSet test = load(test_vec, test_labels);
    double train_err = 0, test_err = 0;
    if (model == "logreg") {
      const LinearClassifier c = train_logreg(train, lr_opts);
      train_err = evaluate(c, train);
      test_err = evaluate(c, test);
    } else {
      mlp_opts.epochs = lr_opts.epochs;
      mlp_opts.lr = lr_opts.lr;
      mlp_opts.seed = lr_opts.seed;
      const MLPClassifier c = train_mlp(train, mlp_opts);
      train_err = evaluate(c, train);
      test_err = evaluate(c, test);
    }
    std::ostringstream report;
    report << "split\terror_rate\n" << "train\t" << train_err << '\n' << "test\t" << test_err << '\n';
    if (out == "-") {
      std::cout << report.str();
    } else {
      open_out(out) << report.str();
    }
  }
};

struct EvalTripletCmd {
  std::string method, corpus, triplets, out;
  ModelFlags model;
  ScheduleFlags schedule;
  InferenceSchedule infer;
  std::vector<std::size_t> proj_dims{128};
  std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0};
  std::string metric = "cosine";
  TokenFlags tok;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("eval-triplet", "Score a feature method on a triplet file");
    app->add_option("--method", method, "tfidf1|tfidf2|wbigram|avg|pv")->required();
    app->add_option("--corpus", corpus, "One document per line")->required();
    app->add_option("--triplets", triplets, "anchor<TAB>positive<TAB>negative per line")->required();
    app->add_option("--out", out, "Report TSV ('-' for stdout)")->required();
    app->add_option("--metric", metric, "cosine|euclidean");
    app->add_option("--infer-steps", infer.steps);
    app->add_option("--infer-lr", infer.lr_start);
    app->add_option("--proj-dim", proj_dims, "Projection sizes to sweep (wbigram)");
    app->add_option("--lambda", lambdas, "Negative weights to sweep (wbigram)");
    app->add_flag("--keep-case", tok.keep_case, "Do not lowercase");
    model.add(app);
    schedule.add(app);
    app->callback([this] { run(); });
  }

  void run() {
    const FeatureMethod m = parse_enum(parse_feature_method, method);
    if (metric != "cosine" && metric != "euclidean") throw UsageError("unknown metric " + metric);
    TripletEvalOptions o;
    o.metric = metric == "cosine" ? Distance::kCosine : Distance::kEuclidean;
    o.dm = model.config(Mode::kDistributedMemory);
    o.dbow = o.dm;
    o.dbow.mode = Mode::kDistributedBagOfWords;
    o.word = o.dm;
    o.word.mode = Mode::kWordOnly;
    o.train = schedule.get();
    o.workers = o.train.workers;
    o.infer = infer;
    o.infer.seed = o.train.seed;
    o.weighted.proj_dims = proj_dims;
    o.weighted.lambdas = lambdas;
    o.weighted.sgd.seed = o.train.seed;

    const auto docs = load_documents(corpus, tok.options());
    std::ifstream tf(triplets);
    if (!tf) throw Error(ErrorCode::kIo, "cannot open " + triplets);
    const auto ordered = read_triplets(tf);
    for (const Triplet& t : ordered) {
      if (std::max({t.anchor, t.positive, t.negative}) >= docs.size()) {
        throw Error(ErrorCode::kInvalidArgument, "triplet refers past the end of the corpus");
      }
    }
    const TripletReport r = evaluate_triplets(m, docs, split_triplets(ordered), o);
    std::ostringstream report;
    report << "split\terror_rate\n"
           << "train\t" << r.train << '\n'
           << "validation\t" << r.validation << '\n'
           << "test\t" << r.test << '\n';
    if (out == "-") {
      std::cout << report.str();
    } else {
      open_out(out) << report.str();
    }
  }
};

struct SynthCmd {
  SynthOptions o;
  std::string out_corpus, out_triplets, out_topics;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("synth-triplets", "Generate a topic corpus with triplets");
    app->add_option("--topics", o.n_topics);
    app->add_option("--docs-per-topic", o.docs_per_topic);
    app->add_option("--vocab-per-topic", o.vocab_per_topic);
    app->add_option("--shared-vocab", o.shared_vocab, "Shared pool size (default: vocab-per-topic)");
    app->add_option("--doc-len", o.doc_len);
    app->add_option("--noise", o.noise);
    app->add_option("--burst", o.burst, "Chance a token repeats an earlier one");
    app->add_option("--triplets", o.n_triplets);
    app->add_option("--seed", o.seed);
    app->add_option("--out-corpus", out_corpus)->required();
    app->add_option("--out-triplets", out_triplets)->required();
    app->add_option("--out-topics", out_topics, "Topic id per document");
    app->callback([this] { run(); });
  }

  void run() {
    SynthData d;
    try {
      d = synth_triplets(o);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidArgument) throw UsageError(e.what());
      throw;
    }
    auto corpus = open_out(out_corpus);
    for (const Document& doc : d.docs) {
      for (std::size_t i = 0; i < doc.size(); ++i) corpus << (i ? " " : "") << doc[i];
      corpus << '\n';
    }
    auto trip = open_out(out_triplets);
    write_triplets(trip, d.triplets);
    if (!out_topics.empty()) {
      auto topics = open_out(out_topics);
      for (int t : d.topics) topics << t << '\n';
    }
  }
};

void print_neighbors(const PVModel& m, const std::vector<Neighbor>& hits, Space space) {
  for (const Neighbor& n : hits) {
    if (space == Space::kWords) {
      std::printf("%s\t%.6f\n", m.vocab.surface(static_cast<WordId>(n.id)).c_str(), n.similarity);
    } else {
      std::printf("%zu\t%.6f\n", n.id, n.similarity);
    }
  }
}

struct NearestCmd {
  std::string model, word, vectors, space = "words";
  std::size_t row = 0, k = 10;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("nearest", "Nearest words or paragraphs by cosine");
    app->add_option("--model", model)->required();
    auto* w = app->add_option("--word", word, "Query word");
    auto* v = app->add_option("--vectors", vectors, "Vector file holding the query");
    w->excludes(v);
    app->add_option("--row", row, "Row of --vectors to use");
    app->add_option("--space", space, "words|paragraphs");
    app->add_option("--k", k);
    app->callback([this] { run(); });
  }

  void run() {
    if (k < 1) throw UsageError("--k must be at least 1");
    if (space != "words" && space != "paragraphs") throw UsageError("unknown space " + space);
    if (word.empty() == vectors.empty()) throw UsageError("give exactly one of --word, --vectors");
    const Space sp = space == "words" ? Space::kWords : Space::kParagraphs;
    const PVModel m = load_model(fs::path(model));
    if (!word.empty()) {
      if (sp != Space::kWords) throw UsageError("--word queries the word space");
      print_neighbors(m, nearest_word(m, word, k), sp);
      return;
    }
    const Matrix<float> q = read_vectors(fs::path(vectors));
    if (row >= q.rows()) throw Error(ErrorCode::kInvalidArgument, "--row out of range");
    print_neighbors(m, nearest(m, q.row(row), k, sp), sp);
  }
};

struct AnalogyCmd {
  std::string model;
  std::vector<std::string> words;
  std::size_t k = 10;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("analogy", "Words closest to b - a + c");
    app->add_option("--model", model)->required();
    app->add_option("words", words, "a b c")->required()->expected(3);
    app->add_option("--k", k);
    app->callback([this] { run(); });
  }

  void run() {
    if (k < 1) throw UsageError("--k must be at least 1");
    const PVModel m = load_model(fs::path(model));
    print_neighbors(m, analogy(m, words[0], words[1], words[2], k), Space::kWords);
  }
};

struct InspectCmd {
  std::string model;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("inspect", "Print model header metadata");
    app->add_option("model", model)->required();
    app->callback([this] { std::cout << inspect_model(fs::path(model)); });
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paragraph vectors: training, inference and evaluation"};
  app.require_subcommand(1);
  BuildVocabCmd build_vocab_cmd;
  TrainCmd train_cmd;
  InferCmd infer_cmd;
  ClassifyCmd classify_cmd;
  EvalTripletCmd eval_cmd;
  SynthCmd synth_cmd;
  NearestCmd nearest_cmd;
  AnalogyCmd analogy_cmd;
  InspectCmd inspect_cmd;
  build_vocab_cmd.add(app);
  train_cmd.add(app);
  infer_cmd.add(app);
  classify_cmd.add(app);
  eval_cmd.add(app);
  synth_cmd.add(app);
  nearest_cmd.add(app);
  analogy_cmd.add(app);
  inspect_cmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
