#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paravec/persist.hpp"

namespace fs = std::filesystem;

namespace {

// Runs the CLI inside a scratch directory and captures stdout and stderr.
struct Cli {
  fs::path dir;

  Cli() : dir(fs::temp_directory_path() / ("paravec_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Cli() { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" PARAVEC_CLI "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
  }

  std::string out() const { return read("stdout.txt"); }
  std::string err() const { return read("stderr.txt"); }
};

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Keeps every line of a file whose index satisfies pred.
std::string pick_lines(const std::string& text, bool (*pred)(std::size_t)) {
  std::istringstream in(text);
  std::string line, out;
  for (std::size_t i = 0; std::getline(in, line); ++i) {
    if (pred(i)) out += line + '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("end-to-end pipeline") {
  const Cli cli;
  REQUIRE(cli.run("synth-triplets --topics 2 --docs-per-topic 40 --vocab-per-topic 15 "
                  "--doc-len 20 --noise 0.2 --triplets 200 --seed 4 --out-corpus corpus.txt "
                  "--out-triplets triplets.tsv --out-topics topics.txt") == 0);
  CHECK(count_lines(cli.read("corpus.txt")) == 80);
  CHECK(count_lines(cli.read("triplets.tsv")) == 200);

  REQUIRE(cli.run("build-vocab --corpus corpus.txt --out vocab.txt") == 0);
  CHECK(cli.read("vocab.txt").rfind("<null>\t0\n", 0) == 0);

  const auto even = [](std::size_t i) { return i % 2 == 0; };
  const auto odd = [](std::size_t i) { return i % 2 == 1; };
  cli.write("train.txt", pick_lines(cli.read("corpus.txt"), even));
  cli.write("test.txt", pick_lines(cli.read("corpus.txt"), odd));
  cli.write("train.lab", pick_lines(cli.read("topics.txt"), even));
  cli.write("test.lab", pick_lines(cli.read("topics.txt"), odd));

  REQUIRE(cli.run("train --corpus train.txt --out m --mode both --dim-word 16 --dim-para 16 "
                  "--window 3 --epochs 30 --lr 0.05 --seed 2") == 0);
  const std::string log = cli.out();
  CHECK(log.rfind("epoch\tmean_loss\twindows\tseconds\n", 0) == 0);
  CHECK(count_lines(log) == 1 + 2 * 30);
  CHECK(fs::exists(cli.dir / "m.dm"));
  CHECK(fs::exists(cli.dir / "m.dbow"));

  REQUIRE(cli.run("infer --model m.dm --model m.dbow --in train.txt --out train.vec") == 0);
  REQUIRE(cli.run("infer --model m.dm --model m.dbow --in test.txt --out test.vec") == 0);
  const auto vec = paravec::read_vectors(cli.dir / "test.vec");
  CHECK(vec.rows() == 40);
  CHECK(vec.cols() == 32);

  REQUIRE(cli.run("classify --train-vec train.vec --train-labels train.lab --test-vec test.vec "
                  "--test-labels test.lab --out -") == 0);
  std::istringstream report(cli.out());
  std::string header, split;
  double train_err = 1, test_err = 1;
  std::getline(report, header);
  CHECK(header == "split\terror_rate");
  report >> split >> train_err >> split >> test_err;
  CHECK(split == "test");
  CHECK(test_err <= 0.1);

  REQUIRE(cli.run("eval-triplet --method tfidf1 --corpus corpus.txt --triplets triplets.tsv "
                  "--out eval.tsv") == 0);
  const std::string eval = cli.read("eval.tsv");
  CHECK(eval.rfind("split\terror_rate\ntrain\t", 0) == 0);
  CHECK(eval.find("\nvalidation\t") != std::string::npos);
  CHECK(eval.find("\ntest\t") != std::string::npos);

  REQUIRE(cli.run("nearest --model m.dm --word t0w1 --k 3") == 0);
  CHECK(count_lines(cli.out()) == 3);
  REQUIRE(cli.run("infer --model m.dm --in test.txt --out dm.vec") == 0);
  REQUIRE(cli.run("nearest --model m.dm --vectors dm.vec --row 1 --space paragraphs --k 2") == 0);
  CHECK(count_lines(cli.out()) == 2);
  CHECK(cli.run("nearest --model m.dbow --vectors train.vec --space words --k 2") != 0);
  REQUIRE(cli.run("analogy --model m.dm t0w1 t0w2 t1w1 --k 4") == 0);
  CHECK(count_lines(cli.out()) == 4);
  REQUIRE(cli.run("inspect m.dbow") == 0);
  CHECK(cli.out().find("mode\tpv-dbow") != std::string::npos);
}

TEST_CASE("exit codes") {
  const Cli cli;
  cli.write("c.txt", "a b c\nb c d\n");
  CHECK(cli.run("") == 1);
  CHECK(cli.run("--help") == 0);
  CHECK(cli.run("train --corpus c.txt --out m --window 1") == 1);
  CHECK(cli.run("train --corpus c.txt --out m --mode sideways") == 1);
  CHECK(cli.run("train --corpus c.txt --out m --bogus") == 1);
  CHECK(cli.run("train --corpus missing.txt --out m") == 2);
  REQUIRE(cli.run("train --corpus c.txt --out m --dim-word 4 --dim-para 4 --window 2 "
                  "--epochs 1") == 0);
  CHECK(cli.run("nearest --model m --word zebra") == 2);
  CHECK(cli.err().find("UnknownWord") != std::string::npos);
  cli.write("short", cli.read("m").substr(0, 40));
  CHECK(cli.run("inspect short") == 2);
  CHECK(cli.run("infer --model short --in c.txt --out v") == 2);
  CHECK(cli.err().find("CorruptModel") != std::string::npos);
}
