#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "taseq/common.hpp"

namespace taseq {

// Flat key=value run configuration: one scalar or path per line, `#` starts
// a comment. Unknown keys are rejected and every value is type-checked at
// load time; no command runs with an unvalidated config.
struct RunConfig {
  // data files
  std::string train_pairs;
  std::string valid_pairs;
  std::string test_pairs;
  std::string lda_docs;
  std::string lda_model = "lda.model";
  std::string message_vocab = "message.vocab";
  std::string output_vocab = "output.vocab";
  std::string checkpoint_dir = "checkpoints";
  std::string train_log = "train.log";

  // corpus
  std::size_t message_vocab_size = 30000;
  std::size_t response_vocab_size = 30000;
  std::size_t max_pair_len = 50;
  std::size_t max_pair_dup = 50;

  // twitter lda
  std::size_t lda_topics = 200;
  double lda_alpha = 0.0;  // 0 = auto (1/T)
  double lda_beta = 0.01;
  double lda_gamma = 0.01;
  std::size_t lda_iterations = 100;
  std::size_t stoplist_size = 2000;
  std::size_t topic_words = 100;

  // model
  std::string variant = "ta-seq2seq";
  std::size_t hidden_size = 1000;
  std::size_t embedding_size = 620;
  std::size_t attention_hidden = 100;
  double init_std = 0.01;

  // training
  std::size_t batch_size = 128;
  double learning_rate = 1.0;
  std::size_t max_epochs = 10;
  std::size_t validate_every = 0;
  std::size_t stop_window = 5;
  double stop_threshold = 2.0;
  double grad_clip = 0.0;
  double adadelta_rho = 0.95;
  double adadelta_epsilon = 1e-6;

  // decoding
  std::size_t beam_width = 5;
  std::size_t max_generate_len = 50;
  bool length_normalize = false;

  std::uint64_t seed = 1;

  double resolved_lda_alpha() const {
    return lda_alpha > 0.0 ? lda_alpha
                           : 1.0 / static_cast<double>(lda_topics);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::size_t parse_config_size(const std::string& key,
                                     const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a non-negative integer, got '" +
                      value + "'");
  }
}

inline double parse_config_double(const std::string& key,
                                  const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + value +
                      "'");
  }
}

inline bool parse_config_bool(const std::string& key,
                              const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: " + key + " expects true/false, got '" + value +
                    "'");
}

inline std::uint64_t parse_config_u64(const std::string& key,
                                      const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an unsigned integer, got '" +
                      value + "'");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"train_pairs", [&](const std::string&, const std::string& v) { cfg.train_pairs = v; }},
      {"valid_pairs", [&](const std::string&, const std::string& v) { cfg.valid_pairs = v; }},
      {"test_pairs", [&](const std::string&, const std::string& v) { cfg.test_pairs = v; }},
      {"lda_docs", [&](const std::string&, const std::string& v) { cfg.lda_docs = v; }},
      {"lda_model", [&](const std::string&, const std::string& v) { cfg.lda_model = v; }},
      {"message_vocab", [&](const std::string&, const std::string& v) { cfg.message_vocab = v; }},
      {"output_vocab", [&](const std::string&, const std::string& v) { cfg.output_vocab = v; }},
      {"checkpoint_dir", [&](const std::string&, const std::string& v) { cfg.checkpoint_dir = v; }},
      {"train_log", [&](const std::string&, const std::string& v) { cfg.train_log = v; }},
      {"message_vocab_size", [&](const std::string& k, const std::string& v) { cfg.message_vocab_size = detail::parse_config_size(k, v); }},
      {"response_vocab_size", [&](const std::string& k, const std::string& v) { cfg.response_vocab_size = detail::parse_config_size(k, v); }},
      {"max_pair_len", [&](const std::string& k, const std::string& v) { cfg.max_pair_len = detail::parse_config_size(k, v); }},
      {"max_pair_dup", [&](const std::string& k, const std::string& v) { cfg.max_pair_dup = detail::parse_config_size(k, v); }},
      {"lda_topics", [&](const std::string& k, const std::string& v) { cfg.lda_topics = detail::parse_config_size(k, v); }},
      {"lda_alpha", [&](const std::string& k, const std::string& v) { cfg.lda_alpha = detail::parse_config_double(k, v); }},
      {"lda_beta", [&](const std::string& k, const std::string& v) { cfg.lda_beta = detail::parse_config_double(k, v); }},
      {"lda_gamma", [&](const std::string& k, const std::string& v) { cfg.lda_gamma = detail::parse_config_double(k, v); }},
      {"lda_iterations", [&](const std::string& k, const std::string& v) { cfg.lda_iterations = detail::parse_config_size(k, v); }},
      {"stoplist_size", [&](const std::string& k, const std::string& v) { cfg.stoplist_size = detail::parse_config_size(k, v); }},
      {"topic_words", [&](const std::string& k, const std::string& v) { cfg.topic_words = detail::parse_config_size(k, v); }},
      {"variant", [&](const std::string&, const std::string& v) { cfg.variant = v; }},
      {"hidden_size", [&](const std::string& k, const std::string& v) { cfg.hidden_size = detail::parse_config_size(k, v); }},
      {"embedding_size", [&](const std::string& k, const std::string& v) { cfg.embedding_size = detail::parse_config_size(k, v); }},
      {"attention_hidden", [&](const std::string& k, const std::string& v) { cfg.attention_hidden = detail::parse_config_size(k, v); }},
      {"init_std", [&](const std::string& k, const std::string& v) { cfg.init_std = detail::parse_config_double(k, v); }},
      {"batch_size", [&](const std::string& k, const std::string& v) { cfg.batch_size = detail::parse_config_size(k, v); }},
      {"learning_rate", [&](const std::string& k, const std::string& v) { cfg.learning_rate = detail::parse_config_double(k, v); }},
      {"max_epochs", [&](const std::string& k, const std::string& v) { cfg.max_epochs = detail::parse_config_size(k, v); }},
      {"validate_every", [&](const std::string& k, const std::string& v) { cfg.validate_every = detail::parse_config_size(k, v); }},
      {"stop_window", [&](const std::string& k, const std::string& v) { cfg.stop_window = detail::parse_config_size(k, v); }},
      {"stop_threshold", [&](const std::string& k, const std::string& v) { cfg.stop_threshold = detail::parse_config_double(k, v); }},
      {"grad_clip", [&](const std::string& k, const std::string& v) { cfg.grad_clip = detail::parse_config_double(k, v); }},
      {"adadelta_rho", [&](const std::string& k, const std::string& v) { cfg.adadelta_rho = detail::parse_config_double(k, v); }},
      {"adadelta_epsilon", [&](const std::string& k, const std::string& v) { cfg.adadelta_epsilon = detail::parse_config_double(k, v); }},
      {"beam_width", [&](const std::string& k, const std::string& v) { cfg.beam_width = detail::parse_config_size(k, v); }},
      {"max_generate_len", [&](const std::string& k, const std::string& v) { cfg.max_generate_len = detail::parse_config_size(k, v); }},
      {"length_normalize", [&](const std::string& k, const std::string& v) { cfg.length_normalize = detail::parse_config_bool(k, v); }},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = detail::parse_config_u64(k, v); }},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    it->second(key, value);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_run_config(in);
}

}  // namespace taseq
