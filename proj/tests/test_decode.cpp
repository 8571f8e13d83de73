#include "doctest.h"

#include <cmath>

#include "taseq/seq2seq.hpp"
#include "support.hpp"

using namespace taseq;
using support::tiny_config;

namespace {

struct Ranked {
  std::vector<int> tokens;
  double log_prob;
};

// Exhaustive enumeration oracle: every sequence of length <= max_len, where
// emitting EOS terminates a sequence. Probabilities come from the same
// decode_step forward surface, but the search itself is brute force.
std::vector<Ranked> enumerate_all(const ModelParams& params,
                                  std::span<const int> message,
                                  const TopicContext& topics,
                                  std::size_t max_len) {
  Graph g;
  BoundModel bound = bind_frozen(g, params);
  Decoder dec(bound, message, topics);
  std::vector<Ranked> out;

  std::function<void(std::vector<int>&, double, NodeRef, std::size_t)> walk =
      [&](std::vector<int>& prefix, double lp, NodeRef state,
          std::size_t depth) {
        if (depth == max_len) {
          out.push_back({prefix, lp});
          return;
        }
        const int y_prev = prefix.empty() ? kBosId : prefix.back();
        StepNodes step = dec.step(y_prev, state);
        GenerationDistribution dist = dec.distribution(step);
        for (std::size_t w = 0; w < dist.probs.size(); ++w) {
          prefix.push_back(static_cast<int>(w));
          const double next_lp = lp + std::log(dist.probs[w]);
          if (static_cast<int>(w) == kEosId)
            out.push_back({prefix, next_lp});
          else
            walk(prefix, next_lp, step.state, depth + 1);
          prefix.pop_back();
        }
      };
  std::vector<int> prefix;
  walk(prefix, 0.0, dec.start_state(), 0);

  std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    if (a.tokens.size() != b.tokens.size())
      return a.tokens.size() < b.tokens.size();
    return a.tokens < b.tokens;
  });
  return out;
}

}  // namespace

TEST_CASE("beam search against exhaustive enumeration") {
  // |U| = 6 and max_len = 3; a beam wide enough to hold every partial
  // hypothesis must reproduce the enumeration ranking exactly.
  ModelConfig cfg = tiny_config(Variant::kTASeq2Seq, 3, 2, 6, 6, 2, 2, 2);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    ModelParams params = ModelParams::init(cfg, 0.5, seed);
    Rng rng(seed);
    TopicContext ctx = support::random_topics(rng, 2, 2, 6);
    std::vector<int> msg = {4, 5};

    auto expected = enumerate_all(params, msg, ctx, 3);

    BeamOptions opt;
    opt.width = 100000;  // saturating: 6^3 sequences at most
    opt.max_len = 3;
    auto got = beam_search(params, msg, ctx, opt);

    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].tokens == expected[i].tokens);
      CHECK(got[i].log_prob ==
            doctest::Approx(expected[i].log_prob).epsilon(1e-9));
    }
  }
}

TEST_CASE("beam width 1 equals greedy decoding") {
  for (int trial = 0; trial < 25; ++trial) {
    const Variant variant =
        trial % 2 == 0 ? Variant::kS2SA : Variant::kTASeq2Seq;
    ModelConfig cfg = tiny_config(variant, 3, 2, 7, 9, 2, 3, 2);
    ModelParams params =
        ModelParams::init(cfg, 0.6, static_cast<std::uint64_t>(100 + trial));
    Rng rng(static_cast<std::uint64_t>(trial));
    TopicContext ctx = variant == Variant::kS2SA
                           ? TopicContext{}
                           : support::random_topics(rng, 3, 2, 9);
    std::vector<int> msg = {4, static_cast<int>(4 + trial % 3)};

    auto greedy = greedy_decode(params, msg, ctx, 6);
    BeamOptions opt;
    opt.width = 1;
    opt.max_len = 6;
    auto beams = beam_search(params, msg, ctx, opt);
    REQUIRE(!beams.empty());
    CHECK(beams[0].response() == greedy);
  }
}

TEST_CASE("beam edge cases") {
  ModelConfig cfg = tiny_config(Variant::kS2SA, 3, 2, 6, 8, 0, 0, 2);
  ModelParams params = ModelParams::init(cfg, 0.4, 9);
  std::vector<int> msg = {4, 5};

  SUBCASE("max_len=1 ranks single tokens by first-step probability") {
    BeamOptions opt;
    opt.width = 100;
    opt.max_len = 1;
    auto beams = beam_search(params, msg, TopicContext{}, opt);
    REQUIRE(beams.size() == 8);
    // Recompute the first-step distribution directly.
    Graph g;
    BoundModel bound = bind_frozen(g, params);
    Decoder dec(bound, msg, TopicContext{});
    GenerationDistribution dist =
        dec.distribution(dec.step(kBosId, dec.start_state()));
    for (std::size_t i = 0; i + 1 < beams.size(); ++i)
      CHECK(beams[i].log_prob >= beams[i + 1].log_prob);
    for (const Hypothesis& h : beams) {
      REQUIRE(h.tokens.size() == 1);
      CHECK(h.log_prob ==
            doctest::Approx(
                std::log(dist.probs[static_cast<std::size_t>(h.tokens[0])]))
                .epsilon(1e-12));
    }
  }

  SUBCASE("model forced to emit EOS first gives an empty response") {
    support::zero_params(params);
    // Bias the output layer so EOS dominates every step.
    params.vocab_out_bias.value.data[kEosId] = 5.0;
    auto greedy = greedy_decode(params, msg, TopicContext{}, 10);
    CHECK(greedy.empty());
    BeamOptions opt;
    opt.width = 2;
    opt.max_len = 10;
    auto beams = beam_search(params, msg, TopicContext{}, opt);
    REQUIRE(!beams.empty());
    CHECK(beams[0].finished);
    CHECK(beams[0].response().empty());
    CHECK(beams[0].tokens == std::vector<int>{kEosId});
  }

  SUBCASE("hypothesis log-probability equals the sum of its step terms") {
    BeamOptions opt;
    opt.width = 3;
    opt.max_len = 4;
    auto beams = beam_search(params, msg, TopicContext{}, opt);
    REQUIRE(!beams.empty());
    // Replay the top hypothesis step by step.
    Graph g;
    BoundModel bound = bind_frozen(g, params);
    Decoder dec(bound, msg, TopicContext{});
    NodeRef state = dec.start_state();
    double lp = 0.0;
    int y_prev = kBosId;
    for (int token : beams[0].tokens) {
      StepNodes step = dec.step(y_prev, state);
      GenerationDistribution dist = dec.distribution(step);
      lp += std::log(dist.probs[static_cast<std::size_t>(token)]);
      state = step.state;
      y_prev = token;
    }
    CHECK(beams[0].log_prob == doctest::Approx(lp).epsilon(1e-12));
  }

  SUBCASE("greedy decode steps match manual argmax walking") {
    ModelParams hand = ModelParams::init(cfg, 0.5, 77);
    auto greedy = greedy_decode(hand, msg, TopicContext{}, 5);
    Graph g;
    BoundModel bound = bind_frozen(g, hand);
    Decoder dec(bound, msg, TopicContext{});
    NodeRef state = dec.start_state();
    int y_prev = kBosId;
    std::vector<int> manual;
    for (int i = 0; i < 5; ++i) {
      StepNodes step = dec.step(y_prev, state);
      GenerationDistribution dist = dec.distribution(step);
      const int best = static_cast<int>(
          std::max_element(dist.probs.begin(), dist.probs.end()) -
          dist.probs.begin());
      if (best == kEosId) break;
      manual.push_back(best);
      y_prev = best;
      state = step.state;
    }
    CHECK(greedy == manual);
  }
}

TEST_CASE("length normalization flag reorders by per-token score") {
  ModelConfig cfg = tiny_config(Variant::kS2SA, 3, 2, 6, 8, 0, 0, 2);
  ModelParams params = ModelParams::init(cfg, 0.4, 15);
  std::vector<int> msg = {4};
  BeamOptions plain;
  plain.width = 50;
  plain.max_len = 3;
  BeamOptions normalized = plain;
  normalized.length_normalize = true;
  auto a = beam_search(params, msg, TopicContext{}, plain);
  auto b = beam_search(params, msg, TopicContext{}, normalized);
  REQUIRE(a.size() == b.size());
  // Same pool either way; only the order may differ.
  double total_a = 0.0, total_b = 0.0;
  for (const auto& h : a) total_a += h.log_prob;
  for (const auto& h : b) total_b += h.log_prob;
  CHECK(total_a == doctest::Approx(total_b).epsilon(1e-9));
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double sa = b[i].log_prob / static_cast<double>(b[i].tokens.size());
    const double sb =
        b[i + 1].log_prob / static_cast<double>(b[i + 1].tokens.size());
    CHECK(sa >= sb);
  }
}
