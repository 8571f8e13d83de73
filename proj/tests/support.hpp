#pragma once

// Shared fixtures and oracles for the test suites. Everything here is
// independent of the code paths under test: the gradient checker runs the
// model only through its public forward surface, and the tiny-model builders
// construct configs directly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "taseq/seq2seq.hpp"

namespace support {

using namespace taseq;

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;
  std::string worst_param;
};

// Central finite differences (f(x+h) - f(x-h)) / 2h per parameter entry,
// compared against one analytic backward pass. An entry passes when the
// absolute gap is below abs_tol (covers exactly-zero gradients) or the
// relative error is below rel_tol.
template <typename Build>
GradCheckReport check_gradients(const std::vector<Parameter*>& params,
                                Build build, double h = 1e-5,
                                double rel_tol = 1e-4,
                                double abs_tol = 1e-8) {
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    NodeRef loss = build(g);
    g.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto eval = [&build]() {
    Graph g;
    NodeRef loss = build(g);
    return g.value(loss).data[0];
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double saved = p->value.data[i];
      p->value.data[i] = saved + h;
      const double up = eval();
      p->value.data[i] = saved - h;
      const double down = eval();
      p->value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].data[i];
      const double gap = std::abs(a - numeric);
      const double rel = gap / std::max(std::abs(a), std::abs(numeric));
      ++report.checked;
      if (gap >= abs_tol && rel >= rel_tol) {
        ++report.failures;
        if (rel > report.worst_rel) {
          report.worst_rel = rel;
          report.worst_param = p->name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return report;
}

inline ModelConfig tiny_config(Variant variant, std::size_t hidden = 4,
                               std::size_t embed = 3,
                               std::size_t msg_vocab = 10,
                               std::size_t out_vocab = 12,
                               std::size_t t_lda = 3,
                               std::size_t capacity = 4,
                               std::size_t attn = 3) {
  ModelConfig cfg;
  cfg.hidden_size = hidden;
  cfg.embedding_size = embed;
  cfg.message_vocab_size = msg_vocab;
  cfg.output_vocab_size = out_vocab;
  cfg.topic_capacity = capacity;
  cfg.topic_embedding_dim = t_lda;
  cfg.attention_hidden = attn;
  cfg.variant = variant;
  return cfg;
}

// Random topic context: distinct non-reserved ids and simplex embeddings.
inline TopicContext random_topics(Rng& rng, std::size_t count,
                                  std::size_t t_lda, std::size_t out_vocab) {
  TopicContext ctx;
  std::vector<int> candidates;
  for (int id = kReservedCount; id < static_cast<int>(out_vocab); ++id)
    candidates.push_back(id);
  for (std::size_t j = 0; j < count && !candidates.empty(); ++j) {
    const std::size_t pick = rng.uniform_index(candidates.size());
    ctx.word_ids.push_back(candidates[pick]);
    candidates.erase(candidates.begin() + static_cast<long>(pick));
    Tensor e({t_lda});
    double total = 0.0;
    for (double& v : e.data) {
      v = rng.uniform01() + 1e-3;
      total += v;
    }
    for (double& v : e.data) v /= total;
    ctx.embeddings.push_back(std::move(e));
  }
  return ctx;
}

inline void randomize(ModelParams& params, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : params.all())
    for (double& v : p->value.data) v = rng.gaussian(0.0, stddev);
}

inline void zero_params(ModelParams& params) {
  for (Parameter* p : params.all()) p->value.fill(0.0);
}

// Scratch directory unique per test invocation.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("taseq_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string data_dir() {
  if (const char* env = std::getenv("TASEQ_DATA")) return env;
  return "data";
}

}  // namespace support
