#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "taseq/corpus.hpp"
#include "taseq/seq2seq.hpp"

namespace taseq {

// A message/response pair encoded for the model, with its topic context
// resolved. topic_index points into a shared table of per-topic contexts.
struct EncodedExample {
  std::vector<int> message;
  std::vector<int> response;  // ends with EOS
  int topic_index = -1;
};

struct EncodedDataset {
  std::vector<EncodedExample> examples;
  std::vector<TopicContext> topic_contexts;

  const TopicContext& context_of(const EncodedExample& e) const {
    static const TopicContext empty;
    if (e.topic_index < 0) return empty;
    return topic_contexts[static_cast<std::size_t>(e.topic_index)];
  }
};

enum class PerplexityMode { kPerResponse, kPerToken };

struct PerplexityResult {
  double value = 0.0;
  bool infinite = false;
};

// Total log-probability of the gold responses plus the token count, shared
// by both perplexity modes so an evaluation pass runs the model once.
struct LogLikelihoodTotals {
  double log_prob_sum = 0.0;
  std::size_t response_count = 0;
  std::size_t token_count = 0;
  bool has_zero_prob = false;
};

inline LogLikelihoodTotals response_log_likelihood(
    const ModelParams& params, const EncodedDataset& data) {
  LogLikelihoodTotals totals;
  for (const EncodedExample& e : data.examples) {
    Graph g;
    BoundModel bound = bind_frozen(g, params);
    NodeRef nll = sequence_nll(bound, e.message, e.response, data.context_of(e));
    const double log_prob = -g.value(nll).data[0];
    if (!std::isfinite(log_prob)) totals.has_zero_prob = true;
    totals.log_prob_sum += log_prob;
    totals.response_count += 1;
    totals.token_count += e.response.size();
  }
  return totals;
}

inline PerplexityResult perplexity_from_totals(const LogLikelihoodTotals& t,
                                               PerplexityMode mode) {
  if (t.response_count == 0)
    throw ContractError("perplexity: empty evaluation set");
  PerplexityResult r;
  if (t.has_zero_prob) {
    r.infinite = true;
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  const double denom = mode == PerplexityMode::kPerResponse
                           ? static_cast<double>(t.response_count)
                           : static_cast<double>(t.token_count);
  r.value = std::exp(-t.log_prob_sum / denom);
  return r;
}

// exp(-(1/N) sum log p(Y_i)); N is the response count in per-response mode
// and the token count (EOS included) in per-token mode.
inline PerplexityResult perplexity(const ModelParams& params,
                                   const EncodedDataset& data,
                                   PerplexityMode mode) {
  return perplexity_from_totals(response_log_likelihood(params, data), mode);
}

struct DistinctResult {
  std::size_t count = 0;
  double ratio = 0.0;
};

// Distinct n-grams pooled over all responses; ratio against total n-gram
// occurrences.
inline DistinctResult distinct_n(
    const std::vector<std::vector<std::string>>& responses, std::size_t n) {
  if (responses.empty()) throw ContractError("distinct_n: no responses");
  if (n < 1) throw ContractError("distinct_n: n must be >= 1");
  std::map<std::vector<std::string>, std::size_t> grams;
  std::size_t total = 0;
  for (const auto& r : responses) {
    if (r.size() < n) continue;
    for (std::size_t i = 0; i + n <= r.size(); ++i) {
      std::vector<std::string> gram(r.begin() + static_cast<long>(i),
                                    r.begin() + static_cast<long>(i + n));
      ++grams[std::move(gram)];
      ++total;
    }
  }
  if (total == 0)
    throw DataError("distinct_n: no n-grams of order " + std::to_string(n));
  DistinctResult out;
  out.count = grams.size();
  out.ratio = static_cast<double>(out.count) / static_cast<double>(total);
  return out;
}

// Items x raters matrix over the fixed label set {0, +1, +2}.
struct AnnotationSet {
  std::vector<std::vector<int>> labels;

  std::size_t items() const { return labels.size(); }
  std::size_t raters() const { return labels.empty() ? 0 : labels[0].size(); }

  void validate() const {
    if (items() < 1) throw ContractError("annotations: no items");
    if (raters() < 2) throw ContractError("annotations: need >= 2 raters");
    for (const auto& row : labels) {
      if (row.size() != raters())
        throw DataError("annotations: ragged matrix");
      for (int v : row)
        if (v < 0 || v > 2)
          throw DataError("annotations: label outside {0,1,2}");
    }
  }
};

inline AnnotationSet load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_annotations: cannot open " + path);
  AnnotationSet set;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip_cr(std::move(line));
    if (line.empty()) continue;
    std::vector<int> row;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, '\t')) row.push_back(std::stoi(cell));
    set.labels.push_back(std::move(row));
  }
  set.validate();
  return set;
}

// Fleiss' kappa over the fixed 3-category set.
inline double fleiss_kappa(const AnnotationSet& annotations) {
  annotations.validate();
  constexpr std::size_t kCategories = 3;
  const double n = static_cast<double>(annotations.raters());
  const double items = static_cast<double>(annotations.items());

  std::array<double, kCategories> category_share{};
  double agreement_sum = 0.0;
  for (const auto& row : annotations.labels) {
    std::array<double, kCategories> counts{};
    for (int v : row) counts[static_cast<std::size_t>(v)] += 1.0;
    double sq = 0.0;
    for (std::size_t j = 0; j < kCategories; ++j) {
      sq += counts[j] * counts[j];
      category_share[j] += counts[j];
    }
    agreement_sum += (sq - n) / (n * (n - 1.0));
  }
  const double p_bar = agreement_sum / items;
  double pe_bar = 0.0;
  for (std::size_t j = 0; j < kCategories; ++j) {
    const double share = category_share[j] / (items * n);
    pe_bar += share * share;
  }
  if (pe_bar >= 1.0)
    throw DataError("fleiss_kappa: all mass on one category, kappa undefined");
  return (p_bar - pe_bar) / (1.0 - pe_bar);
}

struct EvalReport {
  PerplexityResult ppl_response;  // normalized per response ("PPL-D" column)
  PerplexityResult ppl_token;     // normalized per token ("PPL-T")
  DistinctResult distinct1;
  DistinctResult distinct2;
  std::optional<double> kappa;
};

namespace detail {

inline std::string format_ppl(const PerplexityResult& p) {
  if (p.infinite) return "inf";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << p.value;
  return out.str();
}

inline std::string format_distinct(const DistinctResult& d) {
  std::ostringstream out;
  out << d.count << "/" << std::fixed << std::setprecision(3) << d.ratio;
  return out.str();
}

}  // namespace detail

inline void write_report_table(const EvalReport& r, std::ostream& out) {
  out << "PPL-D\tPPL-T\tdistinct-1\tdistinct-2";
  if (r.kappa) out << "\tkappa";
  out << '\n';
  out << detail::format_ppl(r.ppl_response) << '\t'
      << detail::format_ppl(r.ppl_token) << '\t'
      << detail::format_distinct(r.distinct1) << '\t'
      << detail::format_distinct(r.distinct2);
  if (r.kappa) out << '\t' << std::fixed << std::setprecision(4) << *r.kappa;
  out << '\n';
}

inline void write_report_keyvalues(const EvalReport& r, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto ppl = [](const PerplexityResult& p) {
    if (p.infinite) return std::string("inf");
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10)
      << p.value;
    return s.str();
  };
  out << "ppl_d " << ppl(r.ppl_response) << '\n';
  out << "ppl_t " << ppl(r.ppl_token) << '\n';
  out << "distinct_1_count " << r.distinct1.count << '\n';
  out << "distinct_1_ratio " << r.distinct1.ratio << '\n';
  out << "distinct_2_count " << r.distinct2.count << '\n';
  out << "distinct_2_ratio " << r.distinct2.ratio << '\n';
  if (r.kappa) out << "kappa " << *r.kappa << '\n';
}

}  // namespace taseq
