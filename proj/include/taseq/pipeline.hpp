#pragma once

#include <string>
#include <vector>

#include "taseq/corpus.hpp"
#include "taseq/eval.hpp"
#include "taseq/seq2seq.hpp"
#include "taseq/twitter_lda.hpp"

namespace taseq {

// Stoplist-filtered top-n word sets for every topic of a trained LDA model.
struct TopicInventory {
  std::size_t capacity = 0;
  std::vector<TopicWordSet> sets;
};

inline TopicInventory build_topic_inventory(
    const LdaModel& lda, std::size_t n,
    const std::unordered_set<std::string>& stoplist) {
  TopicInventory inv;
  inv.capacity = n;
  inv.sets.reserve(lda.topic_count());
  for (std::size_t z = 0; z < lda.topic_count(); ++z)
    inv.sets.push_back(topic_words(lda, static_cast<int>(z), n, stoplist));
  return inv;
}

// Output vocabulary U: the response vocabulary extended with every topic
// word, so the biased branch always scores ids inside U. Appended words
// follow (topic id, rank) order, deduplicated.
inline Vocabulary build_output_vocabulary(const Vocabulary& response_vocab,
                                          const TopicInventory& inventory) {
  Vocabulary u = response_vocab;
  for (const TopicWordSet& set : inventory.sets)
    for (const std::string& w : set.words)
      if (!u.contains(w)) u.add(w);
  return u;
}

inline std::vector<TopicContext> make_topic_contexts(
    const TopicInventory& inventory, const Vocabulary& output_vocab) {
  std::vector<TopicContext> contexts;
  contexts.reserve(inventory.sets.size());
  for (const TopicWordSet& set : inventory.sets) {
    TopicContext ctx;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!output_vocab.contains(set.words[i]))
        throw DataError("topic word '" + set.words[i] +
                        "' is missing from the output vocabulary; rebuild it "
                        "with the same topic-word settings");
      ctx.word_ids.push_back(output_vocab.id_of(set.words[i]));
      ctx.embeddings.push_back(set.embeddings[i]);
    }
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

// Topic for a message, falling back to the corpus-level prior topic when no
// token is in the LDA vocabulary (a generation surface must not crash on
// OOV-only input). Topics whose word set emptied out fall through to the
// first non-empty one.
inline int resolve_topic(const LdaModel& lda,
                         const std::vector<std::string>& message,
                         const std::vector<TopicContext>& contexts) {
  int z;
  try {
    z = assign_topic(lda, message);
  } catch (const DataError&) {
    z = prior_topic(lda);
  }
  if (!contexts[static_cast<std::size_t>(z)].empty()) return z;
  for (std::size_t i = 0; i < contexts.size(); ++i)
    if (!contexts[i].empty()) return static_cast<int>(i);
  throw DataError(
      "resolve_topic: every topic word set is empty; lower the stoplist size");
}

// Encodes pairs for training or evaluation. Topic contexts are resolved per
// message once; assign_topic is deterministic so caching is exact.
inline EncodedDataset encode_dataset(const std::vector<TokenizedPair>& pairs,
                                     const Vocabulary& message_vocab,
                                     const Vocabulary& output_vocab,
                                     const LdaModel* lda,
                                     std::vector<TopicContext> topic_contexts,
                                     bool uses_topics) {
  EncodedDataset data;
  data.topic_contexts = std::move(topic_contexts);
  data.examples.reserve(pairs.size());
  for (const TokenizedPair& p : pairs) {
    EncodedExample e;
    e.message = encode(message_vocab, p.message);
    e.response = encode(output_vocab, p.response, /*append_eos=*/true);
    if (uses_topics) {
      if (!lda) throw ContractError("encode_dataset: LDA model required");
      e.topic_index = resolve_topic(*lda, p.message, data.topic_contexts);
    }
    data.examples.push_back(std::move(e));
  }
  return data;
}

}  // namespace taseq
