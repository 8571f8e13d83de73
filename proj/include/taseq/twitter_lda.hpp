#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "taseq/corpus.hpp"
#include "taseq/tensor.hpp"

namespace taseq {

struct LdaHyperparams {
  std::size_t topic_count = 200;
  double alpha = 1.0 / 200.0;
  double beta = 0.01;
  double gamma = 0.01;
  std::size_t iterations = 200;
  std::uint64_t seed = 1;

  static LdaHyperparams defaults(std::size_t topics) {
    LdaHyperparams h;
    h.topic_count = topics;
    h.alpha = 1.0 / static_cast<double>(topics);
    return h;
  }

  void validate() const {
    if (topic_count < 1) throw ContractError("lda: topic_count must be >= 1");
    if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
      throw ContractError("lda: alpha, beta, gamma must be > 0");
    if (iterations < 1) throw ContractError("lda: iterations must be >= 1");
  }
};

// Count tables of a trained (or in-training) Twitter LDA model. One topic
// per document; each token carries a background/topic indicator. All counts
// are exact integers so the model file round-trips losslessly.
struct LdaModel {
  LdaHyperparams hyper;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> vocab_ids;
  std::vector<std::string> units;

  std::vector<std::vector<long long>> word_topic;  // C_wz, V x T
  std::vector<long long> topic_total;              // C_z
  std::vector<long long> background_word;          // C_bg_w
  long long background_total = 0;                  // C_bg
  std::vector<std::vector<long long>> unit_topic;  // C_uz, |units| x T
  long long indicator_topic = 0;                   // N_topic
  long long indicator_background = 0;              // N_bg

  // Final-sweep assignments; empty after loading from file.
  std::vector<int> doc_topic;
  std::vector<std::vector<std::uint8_t>> token_is_topic;

  std::size_t topic_count() const { return hyper.topic_count; }
  std::size_t vocab_size() const { return vocab.size(); }

  int word_id(const std::string& token) const {
    auto it = vocab_ids.find(token);
    return it == vocab_ids.end() ? -1 : it->second;
  }

  // Global per-topic document counts, summed over units.
  std::vector<long long> global_unit_topic() const {
    std::vector<long long> g(topic_count(), 0);
    for (const auto& row : unit_topic)
      for (std::size_t z = 0; z < g.size(); ++z) g[z] += row[z];
    return g;
  }
};

// The ranked, stoplist-filtered words of one topic plus their p(z|w)
// embeddings.
struct TopicWordSet {
  std::vector<std::string> words;
  std::vector<Tensor> embeddings;

  std::size_t size() const { return words.size(); }
};

// p(z|w) = C_wz / sum_z' C_wz'.
inline Tensor topic_word_embedding(const LdaModel& model,
                                   const std::string& word) {
  const int w = model.word_id(word);
  if (w < 0)
    throw DataError("topic_word_embedding: unknown word " + word);
  const auto& row = model.word_topic[static_cast<std::size_t>(w)];
  long long total = 0;
  for (long long c : row) total += c;
  if (total == 0)
    throw DataError("topic_word_embedding: word never assigned to a topic: " +
                    word);
  Tensor e({model.topic_count()});
  for (std::size_t z = 0; z < row.size(); ++z)
    e(z) = static_cast<double>(row[z]) / static_cast<double>(total);
  return e;
}

// Collapsed Gibbs sampler. Owns the encoded documents during training so
// that count tables can be verified against stored assignments after every
// sweep. Single-threaded; the produced LdaModel is immutable afterwards.
class GibbsSampler {
 public:
  // The vocabulary defaults to every distinct document token (sorted, so
  // ids are deterministic). A preset vocabulary restricts training to those
  // words; documents left empty by the restriction are skipped.
  GibbsSampler(const std::vector<Document>& docs, LdaHyperparams hyper,
               const std::vector<std::string>& preset_vocab = {})
      : rng_(hyper.seed) {
    hyper.validate();
    if (docs.empty()) throw ContractError("gibbs: no documents");
    model_.hyper = hyper;

    std::map<std::string, int> token_set;
    std::map<std::string, int> unit_set;
    for (const Document& d : docs) {
      for (const std::string& t : d.tokens) token_set.emplace(t, 0);
      unit_set.emplace(d.unit, 0);
    }
    if (!preset_vocab.empty()) {
      token_set.clear();
      for (const std::string& t : preset_vocab) token_set.emplace(t, 0);
    }
    for (auto& [token, id] : token_set) {
      id = static_cast<int>(model_.vocab.size());
      model_.vocab.push_back(token);
      model_.vocab_ids.emplace(token, id);
    }
    for (auto& [unit, id] : unit_set) {
      id = static_cast<int>(model_.units.size());
      model_.units.push_back(unit);
    }

    const std::size_t T = hyper.topic_count;
    model_.word_topic.assign(model_.vocab.size(),
                             std::vector<long long>(T, 0));
    model_.topic_total.assign(T, 0);
    model_.background_word.assign(model_.vocab.size(), 0);
    model_.unit_topic.assign(model_.units.size(),
                             std::vector<long long>(T, 0));

    for (const Document& d : docs) {
      std::vector<int> ids;
      ids.reserve(d.tokens.size());
      for (const std::string& t : d.tokens) {
        const int w = model_.word_id(t);
        if (w >= 0) ids.push_back(w);
      }
      if (ids.empty()) {
        ++skipped_;
        std::cerr << "gibbs: skipping document with no in-vocabulary tokens\n";
        continue;
      }
      docs_.push_back(std::move(ids));
      doc_unit_.push_back(unit_set[d.unit]);
    }
    if (docs_.empty()) throw ContractError("gibbs: every document was empty");

    // Random init: topic per document, then indicator per token.
    model_.doc_topic.resize(docs_.size());
    model_.token_is_topic.resize(docs_.size());
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      const int z = static_cast<int>(rng_.uniform_index(T));
      model_.doc_topic[d] = z;
      model_.unit_topic[doc_unit_[d]][z] += 1;
      model_.token_is_topic[d].resize(docs_[d].size());
      for (std::size_t t = 0; t < docs_[d].size(); ++t) {
        const bool topical = rng_.uniform01() < 0.5;
        model_.token_is_topic[d][t] = topical ? 1 : 0;
        add_token_(d, t, topical, +1);
      }
    }
  }

  // One full sweep: resample each document's topic, then each of its token
  // indicators.
  void sweep() {
    const std::size_t T = model_.topic_count();
    std::vector<double> logw(T);
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      resample_doc_topic_(d, logw);
      for (std::size_t t = 0; t < docs_[d].size(); ++t)
        resample_indicator_(d, t);
    }
    ++sweeps_done_;
  }

  void run(std::size_t sweeps) {
    for (std::size_t i = 0; i < sweeps; ++i) sweep();
  }

  const LdaModel& model() const { return model_; }
  LdaModel take_model() && { return std::move(model_); }
  std::size_t skipped_documents() const { return skipped_; }
  std::size_t sweeps_done() const { return sweeps_done_; }
  const std::vector<std::vector<int>>& encoded_docs() const { return docs_; }

  // Recount every table from the stored assignments and compare.
  bool counts_consistent() const {
    std::vector<std::vector<long long>> wz(model_.vocab.size(),
                                           std::vector<long long>(
                                               model_.topic_count(), 0));
    std::vector<long long> zt(model_.topic_count(), 0);
    std::vector<long long> bg(model_.vocab.size(), 0);
    std::vector<std::vector<long long>> uz(
        model_.units.size(), std::vector<long long>(model_.topic_count(), 0));
    long long bg_total = 0, n_topic = 0, n_bg = 0;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      const int z = model_.doc_topic[d];
      uz[doc_unit_[d]][z] += 1;
      for (std::size_t t = 0; t < docs_[d].size(); ++t) {
        const int w = docs_[d][t];
        if (model_.token_is_topic[d][t]) {
          wz[w][z] += 1;
          zt[z] += 1;
          ++n_topic;
        } else {
          bg[w] += 1;
          ++bg_total;
          ++n_bg;
        }
      }
    }
    return wz == model_.word_topic && zt == model_.topic_total &&
           bg == model_.background_word && uz == model_.unit_topic &&
           bg_total == model_.background_total &&
           n_topic == model_.indicator_topic &&
           n_bg == model_.indicator_background;
  }

 private:
  void add_token_(std::size_t d, std::size_t t, bool topical, long long sign) {
    const int w = docs_[d][t];
    if (topical) {
      model_.word_topic[w][model_.doc_topic[d]] += sign;
      model_.topic_total[model_.doc_topic[d]] += sign;
      model_.indicator_topic += sign;
    } else {
      model_.background_word[w] += sign;
      model_.background_total += sign;
      model_.indicator_background += sign;
    }
  }

  void resample_doc_topic_(std::size_t d, std::vector<double>& logw) {
    const std::size_t T = model_.topic_count();
    const double alpha = model_.hyper.alpha;
    const double beta = model_.hyper.beta;
    const double vbeta = beta * static_cast<double>(model_.vocab.size());
    const int unit = doc_unit_[d];
    const int old_z = model_.doc_topic[d];

    // Remove this document's topic contributions.
    model_.unit_topic[unit][old_z] -= 1;
    std::vector<std::size_t> topical;
    for (std::size_t t = 0; t < docs_[d].size(); ++t)
      if (model_.token_is_topic[d][t]) topical.push_back(t);
    for (std::size_t t : topical) {
      model_.word_topic[docs_[d][t]][old_z] -= 1;
      model_.topic_total[old_z] -= 1;
    }

    // Within-document repeat offsets: m' advances per repeated word, m'' per
    // topical token, independent of the candidate topic.
    std::vector<int> repeat_offset(topical.size());
    std::unordered_map<int, int> seen;
    for (std::size_t i = 0; i < topical.size(); ++i) {
      const int w = docs_[d][topical[i]];
      repeat_offset[i] = seen[w]++;
    }

    for (std::size_t z = 0; z < T; ++z) {
      double lw = std::log(static_cast<double>(model_.unit_topic[unit][z]) +
                           alpha);
      const double base = static_cast<double>(model_.topic_total[z]) + vbeta;
      for (std::size_t i = 0; i < topical.size(); ++i) {
        const int w = docs_[d][topical[i]];
        lw += std::log(static_cast<double>(model_.word_topic[w][z]) + beta +
                       repeat_offset[i]);
        lw -= std::log(base + static_cast<double>(i));
      }
      logw[z] = lw;
    }
    const int new_z = sample_from_log_(logw);

    model_.doc_topic[d] = new_z;
    model_.unit_topic[unit][new_z] += 1;
    for (std::size_t t : topical) {
      model_.word_topic[docs_[d][t]][new_z] += 1;
      model_.topic_total[new_z] += 1;
    }
  }

  void resample_indicator_(std::size_t d, std::size_t t) {
    const double beta = model_.hyper.beta;
    const double gamma = model_.hyper.gamma;
    const double vbeta = beta * static_cast<double>(model_.vocab.size());
    const int w = docs_[d][t];
    const int z = model_.doc_topic[d];

    add_token_(d, t, model_.token_is_topic[d][t], -1);

    const double p_bg =
        (static_cast<double>(model_.indicator_background) + gamma) *
        (static_cast<double>(model_.background_word[w]) + beta) /
        (static_cast<double>(model_.background_total) + vbeta);
    const double p_topic =
        (static_cast<double>(model_.indicator_topic) + gamma) *
        (static_cast<double>(model_.word_topic[w][z]) + beta) /
        (static_cast<double>(model_.topic_total[z]) + vbeta);

    const bool topical = rng_.uniform01() * (p_bg + p_topic) >= p_bg;
    model_.token_is_topic[d][t] = topical ? 1 : 0;
    add_token_(d, t, topical, +1);
  }

  int sample_from_log_(const std::vector<double>& logw) {
    const double m = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    weights_.resize(logw.size());
    for (std::size_t z = 0; z < logw.size(); ++z) {
      weights_[z] = std::exp(logw[z] - m);
      total += weights_[z];
    }
    double u = rng_.uniform01() * total;
    for (std::size_t z = 0; z < logw.size(); ++z) {
      u -= weights_[z];
      if (u <= 0.0) return static_cast<int>(z);
    }
    return static_cast<int>(logw.size()) - 1;
  }

  LdaModel model_;
  std::vector<std::vector<int>> docs_;
  std::vector<int> doc_unit_;
  Rng rng_;
  std::size_t skipped_ = 0;
  std::size_t sweeps_done_ = 0;
  std::vector<double> weights_;
};

inline LdaModel gibbs_train(const std::vector<Document>& docs,
                            const LdaHyperparams& hyper) {
  GibbsSampler sampler(docs, hyper);
  sampler.run(hyper.iterations);
  return std::move(sampler).take_model();
}

// MAP topic under the trained counts: the global unit prior times the
// per-word likelihood ratios, evaluated in log space. Ties go to the lowest
// topic id.
inline int assign_topic(const LdaModel& model,
                        const std::vector<std::string>& message) {
  const double beta = model.hyper.beta;
  const double vbeta = beta * static_cast<double>(model.vocab_size());
  std::vector<int> ids;
  for (const std::string& t : message) {
    const int w = model.word_id(t);
    if (w >= 0) ids.push_back(w);
  }
  if (ids.empty())
    throw DataError("assign_topic: message has no in-vocabulary tokens");

  const std::vector<long long> prior = model.global_unit_topic();
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < model.topic_count(); ++z) {
    double score =
        std::log(static_cast<double>(prior[z]) + model.hyper.alpha);
    const double denom =
        std::log(static_cast<double>(model.topic_total[z]) + vbeta);
    for (int w : ids)
      score += std::log(static_cast<double>(model.word_topic[w][z]) + beta) -
               denom;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(z);
    }
  }
  return best;
}

// Most frequent document topic; the zero-information limit of assign_topic.
inline int prior_topic(const LdaModel& model) {
  const std::vector<long long> prior = model.global_unit_topic();
  return static_cast<int>(std::max_element(prior.begin(), prior.end()) -
                          prior.begin());
}

// The `count` highest-frequency tokens of the document corpus.
inline std::unordered_set<std::string> build_stoplist(
    const std::vector<Document>& docs, std::size_t count = 2000) {
  if (docs.empty()) throw ContractError("build_stoplist: no documents");
  std::map<std::string, std::size_t> freq;
  for (const Document& d : docs)
    for (const std::string& t : d.tokens) ++freq[t];
  auto ranked = detail::rank_by_frequency(freq);
  std::unordered_set<std::string> stop;
  for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i)
    stop.insert(ranked[i].first);
  return stop;
}

// Same ranking computed from model counts alone. Every token occurrence is
// counted in exactly one of C_bg_w or C_wz, so this equals build_stoplist
// over the training documents.
inline std::unordered_set<std::string> frequency_stoplist(
    const LdaModel& model, std::size_t count = 2000) {
  std::map<std::string, std::size_t> freq;
  for (std::size_t w = 0; w < model.vocab_size(); ++w) {
    long long c = model.background_word[w];
    for (long long x : model.word_topic[w]) c += x;
    if (c > 0) freq[model.vocab[w]] = static_cast<std::size_t>(c);
  }
  auto ranked = detail::rank_by_frequency(freq);
  std::unordered_set<std::string> stop;
  for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i)
    stop.insert(ranked[i].first);
  return stop;
}

// Top-n words of a topic by C_wz, stoplist removed before truncation, each
// with its p(z|w) embedding.
inline TopicWordSet topic_words(const LdaModel& model, int topic,
                                std::size_t n,
                                const std::unordered_set<std::string>& stoplist) {
  if (topic < 0 || static_cast<std::size_t>(topic) >= model.topic_count())
    throw ContractError("topic_words: topic id out of range");
  std::vector<std::pair<long long, std::string>> ranked;
  for (std::size_t w = 0; w < model.vocab_size(); ++w) {
    const long long c = model.word_topic[w][static_cast<std::size_t>(topic)];
    if (c > 0 && !stoplist.count(model.vocab[w]))
      ranked.emplace_back(c, model.vocab[w]);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  TopicWordSet set;
  for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) {
    set.words.push_back(ranked[i].second);
    set.embeddings.push_back(topic_word_embedding(model, ranked[i].second));
  }
  return set;
}

// ---- model file ----------------------------------------------------------
//
// Versioned plain-text container. Counts are integers; hyperparameters are
// written with max_digits10 so doubles round-trip exactly.

inline void save_lda_model(const LdaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_lda_model: cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "taseq-lda 1\n";
  out << "topics " << model.hyper.topic_count << '\n';
  out << "alpha " << model.hyper.alpha << '\n';
  out << "beta " << model.hyper.beta << '\n';
  out << "gamma " << model.hyper.gamma << '\n';
  out << "iterations " << model.hyper.iterations << '\n';
  out << "seed " << model.hyper.seed << '\n';
  out << "vocab " << model.vocab.size() << '\n';
  for (const std::string& t : model.vocab) out << t << '\n';
  out << "units " << model.units.size() << '\n';
  for (const std::string& u : model.units) out << u << '\n';
  out << "indicators " << model.indicator_topic << ' '
      << model.indicator_background << '\n';
  out << "background_total " << model.background_total << '\n';
  out << "topic_total";
  for (long long c : model.topic_total) out << ' ' << c;
  out << '\n';
  out << "background_word";
  for (long long c : model.background_word) out << ' ' << c;
  out << '\n';
  for (const auto& row : model.unit_topic) {
    out << "unit_topic";
    for (long long c : row) out << ' ' << c;
    out << '\n';
  }
  for (const auto& row : model.word_topic) {
    out << "word_topic";
    for (long long c : row) out << ' ' << c;
    out << '\n';
  }
  if (!out) throw DataError("save_lda_model: write failed for " + path);
}

namespace detail {

inline std::string expect_keyword_line(std::istream& in,
                                       const std::string& keyword) {
  std::string line;
  if (!std::getline(in, line))
    throw DataError("lda model: truncated file, expected " + keyword);
  line = strip_cr(std::move(line));
  if (line.rfind(keyword, 0) != 0)
    throw DataError("lda model: expected " + keyword + ", got: " + line);
  return line.size() > keyword.size() ? line.substr(keyword.size() + 1)
                                      : std::string();
}

inline std::vector<long long> parse_counts(const std::string& text,
                                           std::size_t expected) {
  std::istringstream in(text);
  std::vector<long long> out;
  long long v;
  while (in >> v) out.push_back(v);
  if (out.size() != expected)
    throw DataError("lda model: count row has wrong length");
  return out;
}

}  // namespace detail

inline LdaModel load_lda_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_lda_model: cannot open " + path);
  LdaModel m;
  std::string header;
  std::getline(in, header);
  if (detail::strip_cr(std::move(header)) != "taseq-lda 1")
    throw DataError("load_lda_model: unsupported header in " + path);
  m.hyper.topic_count =
      std::stoull(detail::expect_keyword_line(in, "topics"));
  m.hyper.alpha = std::stod(detail::expect_keyword_line(in, "alpha"));
  m.hyper.beta = std::stod(detail::expect_keyword_line(in, "beta"));
  m.hyper.gamma = std::stod(detail::expect_keyword_line(in, "gamma"));
  m.hyper.iterations =
      std::stoull(detail::expect_keyword_line(in, "iterations"));
  m.hyper.seed = std::stoull(detail::expect_keyword_line(in, "seed"));
  const std::size_t vocab_size =
      std::stoull(detail::expect_keyword_line(in, "vocab"));
  for (std::size_t i = 0; i < vocab_size; ++i) {
    std::string token;
    if (!std::getline(in, token))
      throw DataError("load_lda_model: truncated vocabulary");
    token = detail::strip_cr(std::move(token));
    m.vocab_ids.emplace(token, static_cast<int>(m.vocab.size()));
    m.vocab.push_back(token);
  }
  const std::size_t unit_count =
      std::stoull(detail::expect_keyword_line(in, "units"));
  for (std::size_t i = 0; i < unit_count; ++i) {
    std::string unit;
    if (!std::getline(in, unit))
      throw DataError("load_lda_model: truncated unit list");
    m.units.push_back(detail::strip_cr(std::move(unit)));
  }
  {
    std::istringstream iv(detail::expect_keyword_line(in, "indicators"));
    iv >> m.indicator_topic >> m.indicator_background;
    if (!iv) throw DataError("load_lda_model: bad indicators line");
  }
  m.background_total =
      std::stoll(detail::expect_keyword_line(in, "background_total"));
  m.topic_total = detail::parse_counts(
      detail::expect_keyword_line(in, "topic_total"), m.hyper.topic_count);
  m.background_word = detail::parse_counts(
      detail::expect_keyword_line(in, "background_word"), vocab_size);
  for (std::size_t u = 0; u < unit_count; ++u)
    m.unit_topic.push_back(detail::parse_counts(
        detail::expect_keyword_line(in, "unit_topic"), m.hyper.topic_count));
  for (std::size_t w = 0; w < vocab_size; ++w)
    m.word_topic.push_back(detail::parse_counts(
        detail::expect_keyword_line(in, "word_topic"), m.hyper.topic_count));
  return m;
}

}  // namespace taseq
