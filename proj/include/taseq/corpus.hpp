#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "taseq/common.hpp"

namespace taseq {

// One message-response training record, whitespace-tokenized upstream.
struct TokenizedPair {
  std::vector<std::string> message;
  std::vector<std::string> response;

  bool operator==(const TokenizedPair&) const = default;
};

enum class Side { kMessage, kResponse };

inline const std::vector<std::string>& side_tokens(const TokenizedPair& p,
                                                   Side s) {
  return s == Side::kMessage ? p.message : p.response;
}

// Token <-> id maps with the four reserved symbols at ids 0..3. Non-reserved
// entries are the most frequent corpus tokens, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary() {
    for (int i = 0; i < kReservedCount; ++i) append_(reserved_symbol(i));
  }

  void add(const std::string& token) {
    if (ids_.count(token))
      throw ContractError("Vocabulary: duplicate token " + token);
    append_(token);
  }

  bool contains(const std::string& token) const { return ids_.count(token); }

  int id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }

  const std::string& token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw ContractError("Vocabulary: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  // Total entries including the reserved block.
  std::size_t size() const { return tokens_.size(); }
  std::size_t non_reserved_size() const { return tokens_.size() - kReservedCount; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  void append_(const std::string& token) {
    ids_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct CorpusStats {
  std::size_t pair_count = 0;
  std::size_t message_tokens = 0;
  std::size_t response_tokens = 0;
  double message_coverage = 0.0;
  double response_coverage = 0.0;
};

// LDA training document: tokens plus an optional unit (user) id.
struct Document {
  std::string unit;
  std::vector<std::string> tokens;
};

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// (frequency desc, token lex asc) ranking shared by vocabularies and the
// LDA stoplist.
inline std::vector<std::pair<std::string, std::size_t>> rank_by_frequency(
    const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace detail

// Reads `message<TAB>response` lines, drops over-length pairs and pairs that
// repeat more than max_dup times (all copies), preserving order otherwise.
inline std::vector<TokenizedPair> load_pairs(const std::string& path,
                                             std::size_t max_len = 50,
                                             std::size_t max_dup = 50) {
  std::ifstream in(path);
  if (!in) throw DataError("load_pairs: cannot open " + path);

  std::vector<TokenizedPair> parsed;
  std::map<std::pair<std::string, std::string>, std::size_t> occurrences;
  std::vector<std::pair<std::string, std::string>> keys;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos ||
        line.find('\t', tab + 1) != std::string::npos)
      throw DataError("load_pairs: line " + std::to_string(line_no) +
                      ": expected exactly one TAB");
    TokenizedPair pair;
    pair.message = detail::split_tokens(line.substr(0, tab));
    pair.response = detail::split_tokens(line.substr(tab + 1));
    keys.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    ++occurrences[keys.back()];
    parsed.push_back(std::move(pair));
  }
  if (line_no == 0) throw DataError("load_pairs: empty corpus file " + path);

  std::vector<TokenizedPair> kept;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const TokenizedPair& p = parsed[i];
    if (p.message.empty() || p.message.size() > max_len) continue;
    if (p.response.empty() || p.response.size() > max_len) continue;
    if (occurrences[keys[i]] > max_dup) continue;
    kept.push_back(p);
  }
  return kept;
}

inline Vocabulary build_vocabulary(const std::vector<TokenizedPair>& pairs,
                                   Side side, std::size_t size = 30000) {
  if (pairs.empty()) throw ContractError("build_vocabulary: no pairs");
  if (size < 1) throw ContractError("build_vocabulary: size must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const TokenizedPair& p : pairs)
    for (const std::string& t : side_tokens(p, side)) ++counts[t];
  Vocabulary vocab;
  auto ranked = detail::rank_by_frequency(counts);
  const std::size_t keep = std::min(size, ranked.size());
  for (std::size_t i = 0; i < keep; ++i) vocab.add(ranked[i].first);
  return vocab;
}

// Token ids; out-of-vocabulary tokens map to UNK. Training-time response
// encoding appends EOS.
inline std::vector<int> encode(const Vocabulary& vocab,
                               const std::vector<std::string>& tokens,
                               bool append_eos = false) {
  std::vector<int> ids;
  ids.reserve(tokens.size() + (append_eos ? 1 : 0));
  for (const std::string& t : tokens) ids.push_back(vocab.id_of(t));
  if (append_eos) ids.push_back(kEosId);
  return ids;
}

// Fraction of corpus tokens on `side` that the vocabulary maps to non-UNK.
inline double coverage(const Vocabulary& vocab,
                       const std::vector<TokenizedPair>& pairs, Side side) {
  if (pairs.empty()) throw ContractError("coverage: no pairs");
  std::size_t total = 0;
  std::size_t covered = 0;
  for (const TokenizedPair& p : pairs)
    for (const std::string& t : side_tokens(p, side)) {
      ++total;
      if (vocab.contains(t)) ++covered;
    }
  if (total == 0) throw DataError("coverage: zero tokens on requested side");
  return static_cast<double>(covered) / static_cast<double>(total);
}

inline CorpusStats corpus_stats(const std::vector<TokenizedPair>& pairs,
                                const Vocabulary& message_vocab,
                                const Vocabulary& response_vocab) {
  CorpusStats s;
  s.pair_count = pairs.size();
  for (const TokenizedPair& p : pairs) {
    s.message_tokens += p.message.size();
    s.response_tokens += p.response.size();
  }
  s.message_coverage = coverage(message_vocab, pairs, Side::kMessage);
  s.response_coverage = coverage(response_vocab, pairs, Side::kResponse);
  return s;
}

// LDA document file: one document per line, optional leading `user<TAB>`.
inline std::vector<Document> load_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_documents: cannot open " + path);
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    Document d;
    const std::size_t tab = line.find('\t');
    if (tab != std::string::npos) {
      d.unit = line.substr(0, tab);
      d.tokens = detail::split_tokens(line.substr(tab + 1));
    } else {
      d.tokens = detail::split_tokens(line);
    }
    if (!d.tokens.empty()) docs.push_back(std::move(d));
  }
  if (docs.empty()) throw DataError("load_documents: no documents in " + path);
  return docs;
}

// Vocabulary file: 4-line reserved header, then tokens in id order.
inline void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_vocabulary: cannot write " + path);
  for (const std::string& t : vocab.tokens()) out << t << '\n';
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_vocabulary: cannot open " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    ++line_no;
    if (line_no <= kReservedCount) {
      if (line != reserved_symbol(static_cast<int>(line_no) - 1))
        throw DataError("load_vocabulary: bad reserved header in " + path);
      continue;
    }
    if (line.empty())
      throw DataError("load_vocabulary: empty token at line " +
                      std::to_string(line_no));
    vocab.add(line);
  }
  if (line_no < kReservedCount)
    throw DataError("load_vocabulary: truncated file " + path);
  return vocab;
}

}  // namespace taseq
