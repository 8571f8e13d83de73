// Integration checks against the built CLI binary. These need TASEQ_CLI to
// point at the executable (ctest sets it); without it the cases are skipped.

#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "taseq/checkpoint.hpp"
#include "taseq/pipeline.hpp"
#include "support.hpp"

using namespace taseq;
using support::tiny_config;

namespace {

const char* cli_path() { return std::getenv("TASEQ_CLI"); }

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// A small trained-enough fixture: hand LDA counts plus a randomly
// initialized TA model saved through the real formats.
struct CliFixture {
  support::TempDir dir{"cli"};
  std::string ckpt, lda;

  CliFixture() {
    LdaModel model;
    model.hyper = LdaHyperparams::defaults(2);
    model.vocab = {"rain", "soup", "sun", "tasty"};
    for (std::size_t i = 0; i < model.vocab.size(); ++i)
      model.vocab_ids.emplace(model.vocab[i], static_cast<int>(i));
    model.units = {""};
    model.word_topic = {{9, 0}, {0, 7}, {8, 1}, {1, 6}};
    model.topic_total = {18, 14};
    model.background_word = {1, 1, 0, 0};
    model.background_total = 2;
    model.unit_topic = {{4, 3}};
    model.indicator_topic = 32;
    model.indicator_background = 2;
    lda = dir.file("toy.lda");
    save_lda_model(model, lda);

    Vocabulary msg_vocab;
    for (const char* t : {"rain", "soup", "sun", "tasty", "the"})
      msg_vocab.add(t);
    Vocabulary out_vocab;
    for (const char* t : {"rain", "soup", "sun", "tasty", "wet", "warm"})
      out_vocab.add(t);

    ModelConfig cfg = tiny_config(Variant::kTASeq2Seq, 6, 4,
                                  msg_vocab.size(), out_vocab.size(), 2, 4, 4);
    cfg.topic_stoplist = 0;
    ModelParams params = ModelParams::init(cfg, 0.25, 99);
    ckpt = dir.file("toy.ckpt");
    save_checkpoint(
        make_checkpoint(params, msg_vocab, out_vocab, nullptr, TrainProgress{}),
        ckpt);
  }
};

}  // namespace

TEST_CASE("cli surfaces" * doctest::skip(cli_path() == nullptr)) {
  const std::string cli = cli_path() ? cli_path() : "";
  CliFixture fx;
  const std::string quiet = " > /dev/null 2>&1";

  SUBCASE("chat transcript replays identically and quit-first is empty") {
    const std::string stdin_file = fx.dir.file("stdin.txt");
    support::write_file(stdin_file, "the sun is warm\nsoup please\nrain\n:quit\n");
    const std::string t1 = fx.dir.file("t1.txt");
    const std::string t2 = fx.dir.file("t2.txt");
    const std::string base = cli + " chat --ckpt " + fx.ckpt + " --lda " +
                             fx.lda + " --beam 2 --max-len 4 --transcript ";
    CHECK(run(base + t1 + " < " + stdin_file + quiet) == 0);
    CHECK(run(base + t2 + " < " + stdin_file + quiet) == 0);
    const std::string transcript = slurp(t1);
    CHECK(transcript == slurp(t2));
    CHECK(std::count(transcript.begin(), transcript.end(), '\n') == 6);

    const std::string empty_in = fx.dir.file("quit.txt");
    support::write_file(empty_in, ":quit\n");
    const std::string t3 = fx.dir.file("t3.txt");
    CHECK(run(base + t3 + " < " + empty_in + quiet) == 0);
    CHECK(slurp(t3).empty());
  }

  SUBCASE("generate is deterministic and beam 1 equals greedy") {
    const std::string input = fx.dir.file("msgs.txt");
    support::write_file(input, "sun sun\nsoup tasty\nzzz qqq\n");
    const std::string base = cli + " generate --ckpt " + fx.ckpt + " --lda " +
                             fx.lda + " --input " + input + " --max-len 4 ";
    const std::string g1 = fx.dir.file("g1.txt");
    const std::string g2 = fx.dir.file("g2.txt");
    CHECK(run(base + "--beam 3 --out " + g1 + quiet) == 0);
    CHECK(run(base + "--beam 3 --out " + g2 + quiet) == 0);
    const std::string generated = slurp(g1);
    CHECK(generated == slurp(g2));
    CHECK(std::count(generated.begin(), generated.end(), '\n') == 3);

    const std::string gb = fx.dir.file("gb.txt");
    const std::string gg = fx.dir.file("gg.txt");
    CHECK(run(base + "--beam 1 --out " + gb + quiet) == 0);
    CHECK(run(base + "--greedy --out " + gg + quiet) == 0);
    CHECK(slurp(gb) == slurp(gg));
  }

  SUBCASE("exit codes: usage 1, data 2") {
    CHECK(run(cli + " lda-topics --model " + fx.lda + " --topic 99" + quiet) ==
          1);
    CHECK(run(cli + " generate --ckpt /nonexistent.ckpt --input " + fx.lda +
              quiet) == 2);
    CHECK(run(cli + " nosuchcommand" + quiet) == 1);
    const std::string bad_cfg = fx.dir.file("bad.cfg");
    support::write_file(bad_cfg, "no_such_key = 1\n");
    CHECK(run(cli + " prepare --config " + bad_cfg + quiet) == 1);
  }

  SUBCASE("topic variant without --lda is a usage error") {
    CHECK(run(cli + " generate --ckpt " + fx.ckpt + " --input " + fx.lda +
              quiet) == 1);
  }
}
