#include "doctest.h"

#include <cmath>

#include "taseq/twitter_lda.hpp"
#include "support.hpp"

using namespace taseq;

namespace {

std::vector<Document> docs_from(std::initializer_list<const char*> lines) {
  std::vector<Document> out;
  for (const char* line : lines)
    out.push_back({"", detail::split_tokens(line)});
  return out;
}

// Direct count-table construction for the hand-evaluated oracles.
LdaModel hand_model(std::size_t topics,
                    const std::vector<std::string>& vocab,
                    const std::vector<std::vector<long long>>& word_topic,
                    const std::vector<long long>& unit_topic_row) {
  LdaModel m;
  m.hyper = LdaHyperparams::defaults(topics);
  m.vocab = vocab;
  for (std::size_t i = 0; i < vocab.size(); ++i)
    m.vocab_ids.emplace(vocab[i], static_cast<int>(i));
  m.units = {""};
  m.word_topic = word_topic;
  m.topic_total.assign(topics, 0);
  for (const auto& row : word_topic)
    for (std::size_t z = 0; z < topics; ++z) m.topic_total[z] += row[z];
  m.background_word.assign(vocab.size(), 0);
  m.unit_topic = {unit_topic_row};
  return m;
}

}  // namespace

TEST_CASE("gibbs_train determinism and degenerate topic count") {
  auto docs = docs_from({"apple banana apple", "cherry cherry date",
                         "banana banana egg", "fig fig apple date"});

  SUBCASE("T=1 assigns topic 0 everywhere") {
    LdaHyperparams h = LdaHyperparams::defaults(1);
    h.iterations = 5;
    h.seed = 3;
    LdaModel m = gibbs_train(docs, h);
    for (int z : m.doc_topic) CHECK(z == 0);
  }

  SUBCASE("fixed seed reproduces the model bitwise") {
    LdaHyperparams h = LdaHyperparams::defaults(3);
    h.iterations = 20;
    h.seed = 99;
    LdaModel a = gibbs_train(docs, h);
    LdaModel b = gibbs_train(docs, h);
    CHECK(a.word_topic == b.word_topic);
    CHECK(a.background_word == b.background_word);
    CHECK(a.doc_topic == b.doc_topic);
    CHECK(a.token_is_topic == b.token_is_topic);
    CHECK(a.unit_topic == b.unit_topic);
  }

  SUBCASE("counts match a recount after every sweep") {
    LdaHyperparams h = LdaHyperparams::defaults(3);
    h.seed = 7;
    GibbsSampler sampler(docs, h);
    CHECK(sampler.counts_consistent());
    for (int i = 0; i < 10; ++i) {
      sampler.sweep();
      CHECK(sampler.counts_consistent());
    }
  }

  SUBCASE("documents with no in-vocabulary tokens are skipped") {
    LdaHyperparams h = LdaHyperparams::defaults(2);
    h.iterations = 2;
    GibbsSampler sampler(docs, h, {"apple", "banana", "egg"});
    // "cherry cherry date" has no surviving token.
    CHECK(sampler.skipped_documents() == 1);
    CHECK(sampler.model().vocab.size() == 3);
    sampler.sweep();
    CHECK(sampler.counts_consistent());
    CHECK_THROWS_AS(GibbsSampler(docs, h, {"zebra"}), ContractError);
  }

  SUBCASE("per-user units get their own prior rows") {
    std::vector<Document> with_users = {
        {"u1", {"apple", "banana"}}, {"u2", {"cherry"}}, {"u1", {"date"}}};
    LdaHyperparams h = LdaHyperparams::defaults(2);
    h.iterations = 3;
    LdaModel m = gibbs_train(with_users, h);
    CHECK(m.units.size() == 2);
    long long docs_counted = 0;
    for (const auto& row : m.unit_topic)
      for (long long c : row) docs_counted += c;
    CHECK(docs_counted == 3);
  }
}

TEST_CASE("assign_topic") {
  // Two topics over three words; all the mass of every query word sits in
  // one topic or the other.
  LdaModel m = hand_model(
      2, {"sun", "rain", "code"},
      {{9, 0}, {6, 0}, {0, 12}},
      {5, 5});

  SUBCASE("mass concentrated in one topic wins") {
    CHECK(assign_topic(m, {"sun", "rain"}) == 0);
    CHECK(assign_topic(m, {"code"}) == 1);
  }

  SUBCASE("no in-vocabulary tokens is an error") {
    CHECK_THROWS_AS(assign_topic(m, {"unknown", "words"}),
                    DataError);
    CHECK_THROWS_AS(assign_topic(m, {}), DataError);
  }

  SUBCASE("two-word message against a hand evaluation of both products") {
    // Evaluate score(z) = log(prior_z + alpha) + sum_w log((C_wz + b) / (C_z + V b))
    // exactly as stated, independently of the implementation.
    const double b = m.hyper.beta;
    const double vb = 3.0 * b;
    const std::vector<std::string> msg = {"sun", "code"};
    double scores[2];
    const double cz[2] = {15.0, 12.0};
    const double prior[2] = {5.0, 5.0};
    const double cwz[2][2] = {{9.0, 0.0}, {0.0, 12.0}};  // per word per topic
    for (int z = 0; z < 2; ++z) {
      scores[z] = std::log(prior[z] + m.hyper.alpha);
      scores[z] += std::log((cwz[0][z] + b) / (cz[z] + vb));
      scores[z] += std::log((cwz[1][z] + b) / (cz[z] + vb));
    }
    const int expected = scores[0] >= scores[1] ? 0 : 1;
    CHECK(assign_topic(m, msg) == expected);
  }

  SUBCASE("invariant under token reordering") {
    auto docs = docs_from({"apple banana apple date", "cherry cherry date",
                           "banana egg egg", "fig fig apple"});
    LdaHyperparams h = LdaHyperparams::defaults(3);
    h.iterations = 15;
    LdaModel trained = gibbs_train(docs, h);
    CHECK(assign_topic(trained, {"apple", "egg", "date"}) ==
          assign_topic(trained, {"egg", "date", "apple"}));
  }
}

TEST_CASE("build_stoplist") {
  auto docs = docs_from({"a a a a a b", "c c d", "e d c"});

  SUBCASE("count=1 takes the most frequent token") {
    auto stop = build_stoplist(docs, 1);
    CHECK(stop == std::unordered_set<std::string>{"a"});
  }

  SUBCASE("count beyond distinct keeps all tokens") {
    auto stop = build_stoplist(docs, 100);
    CHECK(stop.size() == 5);
  }

  SUBCASE("count=2 against a manual tally") {
    // a:5, c:3, d:2, b:1, e:1 -> top-2 {a, c}
    auto stop = build_stoplist(docs, 2);
    CHECK(stop == std::unordered_set<std::string>{"a", "c"});
  }

  SUBCASE("model-count ranking agrees with the document ranking") {
    LdaHyperparams h = LdaHyperparams::defaults(2);
    h.iterations = 10;
    LdaModel m = gibbs_train(docs, h);
    for (std::size_t count : {1u, 2u, 3u, 5u})
      CHECK(frequency_stoplist(m, count) == build_stoplist(docs, count));
  }
}

TEST_CASE("topic_words") {
  LdaModel m = hand_model(
      1, {"low", "mid", "top"},
      {{3}, {5}, {9}},
      {3});

  SUBCASE("hand-built table gives the exact order") {
    auto set = topic_words(m, 0, 10, {});
    CHECK(set.words == std::vector<std::string>{"top", "mid", "low"});
  }

  SUBCASE("stoplisted leader is skipped and the next promoted") {
    auto set = topic_words(m, 0, 10, {"top"});
    CHECK(set.words == std::vector<std::string>{"mid", "low"});
  }

  SUBCASE("n=1 keeps only the best surviving word") {
    auto set = topic_words(m, 0, 1, {});
    CHECK(set.words == std::vector<std::string>{"top"});
    CHECK(set.embeddings.size() == 1);
  }

  SUBCASE("range checked") {
    CHECK_THROWS_AS(topic_words(m, 5, 10, {}), ContractError);
  }

  SUBCASE("never intersects the stoplist, never exceeds n") {
    auto docs = docs_from({"w1 w2 w3 w1", "w2 w4 w5", "w1 w5 w6 w6"});
    LdaHyperparams h = LdaHyperparams::defaults(2);
    h.iterations = 10;
    LdaModel trained = gibbs_train(docs, h);
    auto stop = build_stoplist(docs, 2);
    for (int z = 0; z < 2; ++z) {
      auto set = topic_words(trained, z, 3, stop);
      CHECK(set.size() <= 3);
      for (const auto& w : set.words) CHECK(stop.count(w) == 0);
    }
  }
}

TEST_CASE("topic_word_embedding") {
  LdaModel m = hand_model(
      3, {"w", "u", "q"},
      {{2, 6, 2}, {5, 0, 0}, {1, 1, 1}},
      {1, 1, 1});

  SUBCASE("direct ratios") {
    Tensor e = topic_word_embedding(m, "w");
    CHECK(e(0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(e(1) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(e(2) == doctest::Approx(0.2).epsilon(1e-15));
  }

  SUBCASE("all mass on one topic") {
    Tensor e = topic_word_embedding(m, "u");
    CHECK(e(0) == 1.0);
    CHECK(e(1) == 0.0);
    CHECK(e(2) == 0.0);
  }

  SUBCASE("symmetric counts give a uniform embedding") {
    LdaModel sym = hand_model(4, {"x"}, {{1, 1, 1, 1}}, {1, 1, 1, 1});
    Tensor e = topic_word_embedding(sym, "x");
    for (double v : e.data) CHECK(v == 0.25);
  }

  SUBCASE("zero counts rejected") {
    LdaModel zero = hand_model(2, {"x"}, {{0, 0}}, {1, 1});
    CHECK_THROWS_AS(topic_word_embedding(zero, "x"), DataError);
  }

  SUBCASE("every embedding sums to one after training") {
    auto docs = docs_from({"m n o p", "n n q", "o q r m", "p p r"});
    LdaHyperparams h = LdaHyperparams::defaults(3);
    h.iterations = 12;
    LdaModel trained = gibbs_train(docs, h);
    for (const std::string& w : trained.vocab) {
      long long total = 0;
      for (long long c : trained.word_topic[trained.word_id(w)]) total += c;
      if (total == 0) continue;
      Tensor e = topic_word_embedding(trained, w);
      double s = 0.0;
      for (double v : e.data) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("lda model file round-trip") {
  support::TempDir dir("ldamodel");
  std::vector<Document> docs = {{"u1", {"alpha", "beta", "alpha"}},
                                {"", {"gamma", "beta"}},
                                {"u1", {"delta", "gamma", "gamma"}}};
  LdaHyperparams h = LdaHyperparams::defaults(3);
  h.iterations = 8;
  h.seed = 21;
  LdaModel m = gibbs_train(docs, h);
  save_lda_model(m, dir.file("m.lda"));
  LdaModel loaded = load_lda_model(dir.file("m.lda"));

  CHECK(loaded.hyper.topic_count == m.hyper.topic_count);
  CHECK(loaded.hyper.alpha == m.hyper.alpha);
  CHECK(loaded.hyper.beta == m.hyper.beta);
  CHECK(loaded.hyper.gamma == m.hyper.gamma);
  CHECK(loaded.vocab == m.vocab);
  CHECK(loaded.units == m.units);
  CHECK(loaded.word_topic == m.word_topic);
  CHECK(loaded.topic_total == m.topic_total);
  CHECK(loaded.background_word == m.background_word);
  CHECK(loaded.background_total == m.background_total);
  CHECK(loaded.unit_topic == m.unit_topic);
  CHECK(loaded.indicator_topic == m.indicator_topic);
  CHECK(loaded.indicator_background == m.indicator_background);

  // Save-load-save is byte stable.
  save_lda_model(loaded, dir.file("m2.lda"));
  std::ifstream f1(dir.file("m.lda")), f2(dir.file("m2.lda"));
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}
