#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "taseq/graph.hpp"

namespace taseq {

// Model family: the full model and its three ablations.
enum class Variant { kS2SA, kTopicConcat, kTopicAttention, kTASeq2Seq };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kS2SA: return "s2sa";
    case Variant::kTopicConcat: return "topic-concat";
    case Variant::kTopicAttention: return "topic-attention";
    case Variant::kTASeq2Seq: return "ta-seq2seq";
  }
  throw ContractError("variant_name: bad variant");
}

inline Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::kS2SA, Variant::kTopicConcat,
                    Variant::kTopicAttention, Variant::kTASeq2Seq})
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown variant: " + name);
}

struct ModelConfig {
  std::size_t hidden_size = 1000;      // full-scale default; desk runs use far less
  std::size_t embedding_size = 620;
  std::size_t message_vocab_size = 0;
  std::size_t output_vocab_size = 0;   // |U| = response vocab + topic words
  std::size_t topic_capacity = 100;    // n
  std::size_t topic_embedding_dim = 0; // LDA topic count
  std::size_t topic_stoplist = 2000;   // how K was filtered; rides along so
                                       // checkpoints regenerate identical K
  std::size_t attention_hidden = 100;
  Variant variant = Variant::kTASeq2Seq;

  bool uses_topics() const { return variant != Variant::kS2SA; }
  bool uses_topic_attention() const {
    return variant == Variant::kTopicAttention ||
           variant == Variant::kTASeq2Seq;
  }
  bool uses_topic_bias() const { return variant == Variant::kTASeq2Seq; }

  // Encoder states are forward/backward concatenations.
  std::size_t encoder_state_dim() const { return 2 * hidden_size; }

  std::size_t topic_vector_dim() const {
    if (!uses_topics()) return 0;
    // TopicConcat maps the concatenated embeddings to the context-vector
    // dimension; attention variants keep the native LDA dimension.
    return variant == Variant::kTopicConcat ? encoder_state_dim()
                                            : topic_embedding_dim;
  }

  std::size_t decoder_input_dim() const {
    return embedding_size + encoder_state_dim() + topic_vector_dim();
  }

  void validate() const {
    if (hidden_size < 1 || embedding_size < 1 || attention_hidden < 1)
      throw ConfigError("model config: sizes must be >= 1");
    if (message_vocab_size < 1 || output_vocab_size < 1)
      throw ConfigError("model config: vocabulary sizes unset");
    if (uses_topics() && (topic_embedding_dim < 1 || topic_capacity < 1))
      throw ConfigError("model config: topic dimensions unset");
  }
};

struct GruParams {
  Parameter update_in, update_rec;
  Parameter reset_in, reset_rec;
  Parameter cand_in, cand_rec;
};

struct MlpParams {
  Parameter hidden_w, hidden_b;
  Parameter out_w, out_b;
};

// Every trainable tensor of the model. Only tensors used by the configured
// variant are allocated, so checkpoints carry exactly the active set.
struct ModelParams {
  ModelConfig config;

  Parameter message_embedding;
  Parameter output_embedding;
  GruParams encoder_fwd, encoder_bwd, decoder;
  Parameter init_state_w, init_state_b;
  MlpParams message_attention;
  MlpParams topic_attention;  // TopicAttention / TA-Seq2Seq
  MlpParams topic_concat;     // TopicConcat
  Parameter vocab_out_state, vocab_out_prev, vocab_out_bias;
  Parameter topic_out_state, topic_out_prev, topic_out_ctx,
      topic_out_bias;  // TA-Seq2Seq

  static ModelParams init(const ModelConfig& cfg, double stddev,
                          std::uint64_t seed) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    std::uint64_t counter = seed;
    auto next = [&counter, stddev](std::string name,
                                   std::vector<std::size_t> shape) {
      return Parameter(std::move(name), init_gaussian(shape, stddev, counter++));
    };
    const std::size_t dh = cfg.hidden_size;
    const std::size_t de = cfg.embedding_size;
    const std::size_t ds = cfg.encoder_state_dim();
    const std::size_t ah = cfg.attention_hidden;
    const std::size_t u = cfg.output_vocab_size;

    p.message_embedding = next("message_embedding",
                               {cfg.message_vocab_size, de});
    p.output_embedding = next("output_embedding", {u, de});
    auto gru = [&next](const std::string& prefix, std::size_t hidden,
                       std::size_t input) {
      GruParams g;
      g.update_in = next(prefix + ".update_in", {hidden, input});
      g.update_rec = next(prefix + ".update_rec", {hidden, hidden});
      g.reset_in = next(prefix + ".reset_in", {hidden, input});
      g.reset_rec = next(prefix + ".reset_rec", {hidden, hidden});
      g.cand_in = next(prefix + ".cand_in", {hidden, input});
      g.cand_rec = next(prefix + ".cand_rec", {hidden, hidden});
      return g;
    };
    p.encoder_fwd = gru("encoder_fwd", dh, de);
    p.encoder_bwd = gru("encoder_bwd", dh, de);
    p.decoder = gru("decoder", dh, cfg.decoder_input_dim());
    p.init_state_w = next("init_state.w", {dh, ds});
    p.init_state_b = next("init_state.b", {dh});
    auto mlp = [&next](const std::string& prefix, std::size_t input,
                       std::size_t hidden, std::size_t output) {
      MlpParams m;
      m.hidden_w = next(prefix + ".hidden_w", {hidden, input});
      m.hidden_b = next(prefix + ".hidden_b", {hidden});
      m.out_w = next(prefix + ".out_w", {output, hidden});
      m.out_b = next(prefix + ".out_b", {output});
      return m;
    };
    p.message_attention = mlp("message_attention", dh + ds, ah, 1);
    if (cfg.uses_topic_attention())
      p.topic_attention =
          mlp("topic_attention", dh + cfg.topic_embedding_dim + ds, ah, 1);
    if (cfg.variant == Variant::kTopicConcat)
      p.topic_concat = mlp("topic_concat",
                           cfg.topic_capacity * cfg.topic_embedding_dim, ah, ds);
    p.vocab_out_state = next("vocab_out.state_w", {u, dh});
    p.vocab_out_prev = next("vocab_out.prev_w", {u, de});
    p.vocab_out_bias = next("vocab_out.bias", {u});
    if (cfg.uses_topic_bias()) {
      p.topic_out_state = next("topic_out.state_w", {u, dh});
      p.topic_out_prev = next("topic_out.prev_w", {u, de});
      p.topic_out_ctx = next("topic_out.ctx_w", {u, ds});
      p.topic_out_bias = next("topic_out.bias", {u});
    }
    return p;
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    auto push_gru = [&out](GruParams& g) {
      out.insert(out.end(), {&g.update_in, &g.update_rec, &g.reset_in,
                             &g.reset_rec, &g.cand_in, &g.cand_rec});
    };
    auto push_mlp = [&out](MlpParams& m) {
      out.insert(out.end(), {&m.hidden_w, &m.hidden_b, &m.out_w, &m.out_b});
    };
    out.push_back(&message_embedding);
    out.push_back(&output_embedding);
    push_gru(encoder_fwd);
    push_gru(encoder_bwd);
    push_gru(decoder);
    out.push_back(&init_state_w);
    out.push_back(&init_state_b);
    push_mlp(message_attention);
    if (config.uses_topic_attention()) push_mlp(topic_attention);
    if (config.variant == Variant::kTopicConcat) push_mlp(topic_concat);
    out.insert(out.end(),
               {&vocab_out_state, &vocab_out_prev, &vocab_out_bias});
    if (config.uses_topic_bias())
      out.insert(out.end(), {&topic_out_state, &topic_out_prev,
                             &topic_out_ctx, &topic_out_bias});
    return out;
  }

  std::vector<const Parameter*> all() const {
    auto mutable_list = const_cast<ModelParams*>(this)->all();
    return {mutable_list.begin(), mutable_list.end()};
  }

  void zero_grad() {
    for (Parameter* p : all()) p->zero_grad();
  }
};

// Topic words of one message: their ids in the output vocabulary and their
// p(z|.) embeddings from the LDA model. Embeddings are fixed inputs, never
// trained.
struct TopicContext {
  std::vector<int> word_ids;
  std::vector<Tensor> embeddings;

  std::size_t size() const { return word_ids.size(); }
  bool empty() const { return word_ids.empty(); }
};

// ---- graph bindings ------------------------------------------------------

struct BoundGru {
  NodeRef update_in, update_rec, reset_in, reset_rec, cand_in, cand_rec;
};

struct BoundMlp {
  NodeRef hidden_w, hidden_b, out_w, out_b;
};

struct BoundModel {
  Graph* graph = nullptr;
  ModelConfig config;
  NodeRef message_embedding, output_embedding;
  BoundGru encoder_fwd, encoder_bwd, decoder;
  NodeRef init_state_w, init_state_b;
  BoundMlp message_attention, topic_attention, topic_concat;
  NodeRef vocab_out_state, vocab_out_prev, vocab_out_bias;
  NodeRef topic_out_state, topic_out_prev, topic_out_ctx, topic_out_bias;
};

namespace detail {

template <typename Insert>
BoundModel bind_with(Graph& g, const ModelConfig& cfg, Insert insert,
                     ModelParams& p) {
  BoundModel b;
  b.graph = &g;
  b.config = cfg;
  auto gru = [&insert](GruParams& gp) {
    return BoundGru{insert(gp.update_in), insert(gp.update_rec),
                    insert(gp.reset_in),  insert(gp.reset_rec),
                    insert(gp.cand_in),   insert(gp.cand_rec)};
  };
  auto mlp = [&insert](MlpParams& mp) {
    return BoundMlp{insert(mp.hidden_w), insert(mp.hidden_b),
                    insert(mp.out_w), insert(mp.out_b)};
  };
  b.message_embedding = insert(p.message_embedding);
  b.output_embedding = insert(p.output_embedding);
  b.encoder_fwd = gru(p.encoder_fwd);
  b.encoder_bwd = gru(p.encoder_bwd);
  b.decoder = gru(p.decoder);
  b.init_state_w = insert(p.init_state_w);
  b.init_state_b = insert(p.init_state_b);
  b.message_attention = mlp(p.message_attention);
  if (cfg.uses_topic_attention()) b.topic_attention = mlp(p.topic_attention);
  if (cfg.variant == Variant::kTopicConcat) b.topic_concat = mlp(p.topic_concat);
  b.vocab_out_state = insert(p.vocab_out_state);
  b.vocab_out_prev = insert(p.vocab_out_prev);
  b.vocab_out_bias = insert(p.vocab_out_bias);
  if (cfg.uses_topic_bias()) {
    b.topic_out_state = insert(p.topic_out_state);
    b.topic_out_prev = insert(p.topic_out_prev);
    b.topic_out_ctx = insert(p.topic_out_ctx);
    b.topic_out_bias = insert(p.topic_out_bias);
  }
  return b;
}

}  // namespace detail

// Trainable binding: parameters become graph leaves that receive gradients.
inline BoundModel bind_trainable(Graph& g, ModelParams& params) {
  return detail::bind_with(
      g, params.config, [&g](Parameter& p) { return g.param(p); }, params);
}

// Frozen binding for decoding and evaluation.
inline BoundModel bind_frozen(Graph& g, const ModelParams& params) {
  auto& mutable_params = const_cast<ModelParams&>(params);
  return detail::bind_with(
      g, params.config, [&g](Parameter& p) { return g.input(p.value); },
      mutable_params);
}

// One GRU step:
//   z = sigmoid(Wz x + Uz h); r = sigmoid(Wr x + Ur h)
//   s = tanh(Ws x + Us (h o r)); h' = (1-z) o s + z o h
inline NodeRef gru_step(Graph& g, const BoundGru& p, NodeRef x, NodeRef h) {
  NodeRef z = g.sigmoid(g.add(g.matmul(p.update_in, x), g.matmul(p.update_rec, h)));
  NodeRef r = g.sigmoid(g.add(g.matmul(p.reset_in, x), g.matmul(p.reset_rec, h)));
  NodeRef s = g.tanh(g.add(g.matmul(p.cand_in, x), g.matmul(p.cand_rec, g.mul(h, r))));
  // (1-z) o s + z o h, written as s + z o (h - s)
  return g.add(s, g.mul(z, g.sub(h, s)));
}

inline NodeRef mlp_apply(Graph& g, const BoundMlp& p, NodeRef x) {
  NodeRef hidden = g.tanh(g.add(g.matmul(p.hidden_w, x), p.hidden_b));
  return g.add(g.matmul(p.out_w, hidden), p.out_b);
}

struct EncoderOutput {
  std::vector<NodeRef> states;  // per position, forward/backward concatenated
  NodeRef summary;              // concat(forward final, backward final)
};

inline EncoderOutput encode(const BoundModel& m, std::span<const int> message) {
  if (message.empty()) throw ContractError("encode: empty message");
  Graph& g = *m.graph;
  const std::size_t T = message.size();
  for (int id : message)
    if (id < 0 || static_cast<std::size_t>(id) >= m.config.message_vocab_size)
      throw ContractError("encode: message id out of vocabulary");

  std::vector<NodeRef> inputs(T);
  for (std::size_t t = 0; t < T; ++t)
    inputs[t] = g.row(m.message_embedding,
                      static_cast<std::size_t>(message[t]));

  NodeRef zero = g.input(Tensor::zeros({m.config.hidden_size}));
  std::vector<NodeRef> fwd(T), bwd(T);
  NodeRef h = zero;
  for (std::size_t t = 0; t < T; ++t) {
    h = gru_step(g, m.encoder_fwd, inputs[t], h);
    fwd[t] = h;
  }
  h = zero;
  for (std::size_t t = T; t-- > 0;) {
    h = gru_step(g, m.encoder_bwd, inputs[t], h);
    bwd[t] = h;
  }
  EncoderOutput out;
  out.states.resize(T);
  for (std::size_t t = 0; t < T; ++t) out.states[t] = g.concat({fwd[t], bwd[t]});
  out.summary = g.concat({fwd[T - 1], bwd[0]});
  return out;
}

// s_{-1} = tanh(affine(summary)).
inline NodeRef initial_state(const BoundModel& m, const EncoderOutput& enc) {
  Graph& g = *m.graph;
  return g.tanh(g.add(g.matmul(m.init_state_w, enc.summary), m.init_state_b));
}

// Context vector: softmax-weighted average of encoder states, scores from a
// one-hidden-layer tanh MLP over (s_prev, h_j).
inline NodeRef message_attention(const BoundModel& m, NodeRef s_prev,
                                 const EncoderOutput& enc) {
  Graph& g = *m.graph;
  std::vector<NodeRef> scores;
  scores.reserve(enc.states.size());
  for (NodeRef h : enc.states)
    scores.push_back(mlp_apply(g, m.message_attention, g.concat({s_prev, h})));
  NodeRef weights = g.softmax(g.concat(scores));
  NodeRef context = g.scalar_mul(g.pick(weights, 0), enc.states[0]);
  for (std::size_t j = 1; j < enc.states.size(); ++j)
    context = g.add(context,
                    g.scalar_mul(g.pick(weights, j), enc.states[j]));
  return context;
}

// Topic embeddings bound into the graph, plus the static TopicConcat vector
// when that variant is active.
struct BoundTopics {
  std::vector<int> word_ids;
  std::vector<NodeRef> embeddings;
  NodeRef concat_vector;  // TopicConcat only
};

inline BoundTopics bind_topics(const BoundModel& m, const TopicContext& topics) {
  Graph& g = *m.graph;
  BoundTopics bt;
  if (!m.config.uses_topics()) return bt;
  if (topics.empty())
    throw ContractError("bind_topics: topic-aware variant with no topic words");
  if (topics.size() > m.config.topic_capacity)
    throw ContractError("bind_topics: more topic words than capacity");
  bt.word_ids = topics.word_ids;
  for (std::size_t j = 0; j < topics.size(); ++j) {
    if (topics.embeddings[j].numel() != m.config.topic_embedding_dim)
      throw DimensionError("bind_topics: embedding dimension mismatch");
    const int id = topics.word_ids[j];
    if (id < 0 || static_cast<std::size_t>(id) >= m.config.output_vocab_size)
      throw ContractError("bind_topics: topic word id outside output vocab");
    bt.embeddings.push_back(g.input(topics.embeddings[j]));
  }
  if (m.config.variant == Variant::kTopicConcat) {
    // Fixed-width input: missing slots are zero embeddings.
    std::vector<NodeRef> parts = bt.embeddings;
    if (topics.size() < m.config.topic_capacity) {
      NodeRef pad = g.input(Tensor::zeros({m.config.topic_embedding_dim}));
      parts.resize(m.config.topic_capacity, pad);
    }
    bt.concat_vector = mlp_apply(g, m.topic_concat, g.concat(parts));
  }
  return bt;
}

// Topic vector by attention over topic-word embeddings; scores take the
// encoder summary as an extra input.
inline NodeRef topic_attention(const BoundModel& m, NodeRef s_prev,
                               const BoundTopics& topics, NodeRef summary) {
  if (topics.embeddings.empty())
    throw ContractError("topic_attention: empty topic set");
  Graph& g = *m.graph;
  std::vector<NodeRef> scores;
  scores.reserve(topics.embeddings.size());
  for (NodeRef k : topics.embeddings)
    scores.push_back(
        mlp_apply(g, m.topic_attention, g.concat({s_prev, k, summary})));
  NodeRef weights = g.softmax(g.concat(scores));
  NodeRef vec = g.scalar_mul(g.pick(weights, 0), topics.embeddings[0]);
  for (std::size_t j = 1; j < topics.embeddings.size(); ++j)
    vec = g.add(vec, g.scalar_mul(g.pick(weights, j), topics.embeddings[j]));
  return vec;
}

// Node-level result of one decoder step.
struct StepNodes {
  NodeRef state;         // s_i
  NodeRef vocab_scores;  // over the full output vocabulary
  NodeRef topic_scores;  // over the message's topic words; invalid unless TA
  NodeRef log_norm;      // log Z
};

// Per-step output distribution. probs = vocab_probs + topic_probs shares one
// normalizer, which is what biases generation toward topic words.
struct GenerationDistribution {
  std::vector<double> vocab_probs;
  std::vector<double> topic_probs;
  double normalizer = 0.0;
  std::vector<double> probs;
};

inline StepNodes decode_step_nodes(const BoundModel& m, int y_prev,
                                   NodeRef s_prev, NodeRef context,
                                   NodeRef topic_vector,
                                   const std::vector<int>& topic_ids) {
  Graph& g = *m.graph;
  const ModelConfig& cfg = m.config;
  if (y_prev < 0 || static_cast<std::size_t>(y_prev) >= cfg.output_vocab_size)
    throw ContractError("decode_step: previous token outside output vocab");
  NodeRef prev_emb = g.row(m.output_embedding, static_cast<std::size_t>(y_prev));

  std::vector<NodeRef> gru_in{prev_emb, context};
  if (cfg.uses_topics()) {
    if (!topic_vector.valid())
      throw ContractError("decode_step: missing topic vector");
    gru_in.push_back(topic_vector);
  }
  StepNodes out;
  out.state = gru_step(g, m.decoder, g.concat(gru_in), s_prev);

  NodeRef vocab_pre =
      g.add(g.add(g.matmul(m.vocab_out_state, out.state),
                  g.matmul(m.vocab_out_prev, prev_emb)),
            m.vocab_out_bias);
  // S2SA keeps unbounded logits; topic-aware variants squash with tanh.
  out.vocab_scores =
      cfg.variant == Variant::kS2SA ? vocab_pre : g.tanh(vocab_pre);

  if (cfg.uses_topic_bias()) {
    if (topic_ids.empty())
      throw ContractError("decode_step: biased variant with no topic words");
    NodeRef topic_pre = g.add(
        g.add(g.add(g.matmul(m.topic_out_state, out.state),
                    g.matmul(m.topic_out_prev, prev_emb)),
              g.matmul(m.topic_out_ctx, context)),
        m.topic_out_bias);
    NodeRef squashed = g.tanh(topic_pre);
    std::vector<NodeRef> picks;
    picks.reserve(topic_ids.size());
    for (int id : topic_ids)
      picks.push_back(g.pick(squashed, static_cast<std::size_t>(id)));
    out.topic_scores = g.concat(picks);
    out.log_norm =
        g.logsumexp(g.concat({out.vocab_scores, out.topic_scores}));
  } else {
    out.log_norm = g.logsumexp(out.vocab_scores);
  }
  return out;
}

inline GenerationDistribution materialize_distribution(
    const Graph& g, const StepNodes& step, const std::vector<int>& topic_ids,
    std::size_t vocab_size) {
  GenerationDistribution dist;
  const double log_z = g.value(step.log_norm).data[0];
  dist.normalizer = std::exp(log_z);
  const Tensor& vs = g.value(step.vocab_scores);
  dist.vocab_probs.resize(vocab_size);
  for (std::size_t w = 0; w < vocab_size; ++w)
    dist.vocab_probs[w] = std::exp(vs(w) - log_z);
  dist.topic_probs.assign(vocab_size, 0.0);
  if (step.topic_scores.valid()) {
    const Tensor& ts = g.value(step.topic_scores);
    for (std::size_t j = 0; j < topic_ids.size(); ++j)
      dist.topic_probs[static_cast<std::size_t>(topic_ids[j])] =
          std::exp(ts(j) - log_z);
  }
  dist.probs.resize(vocab_size);
  for (std::size_t w = 0; w < vocab_size; ++w)
    dist.probs[w] = dist.vocab_probs[w] + dist.topic_probs[w];
  return dist;
}

// Drives decoding for one message: encodes once, then serves per-step
// attention + decoder updates. Works for both the teacher-forced training
// path and search-time decoding.
class Decoder {
 public:
  Decoder(const BoundModel& m, std::span<const int> message,
          const TopicContext& topics)
      : m_(&m), enc_(encode(m, message)), topics_(bind_topics(m, topics)) {
    init_state_ = initial_state(m, enc_);
  }

  const ModelConfig& config() const { return m_->config; }
  Graph& graph() const { return *m_->graph; }
  NodeRef start_state() const { return init_state_; }
  const std::vector<int>& topic_ids() const { return topics_.word_ids; }

  StepNodes step(int y_prev, NodeRef s_prev) const {
    NodeRef context = message_attention(*m_, s_prev, enc_);
    NodeRef topic_vec;
    if (m_->config.uses_topic_attention())
      topic_vec = topic_attention(*m_, s_prev, topics_, enc_.summary);
    else if (m_->config.variant == Variant::kTopicConcat)
      topic_vec = topics_.concat_vector;
    return decode_step_nodes(*m_, y_prev, s_prev, context, topic_vec,
                             topics_.word_ids);
  }

  GenerationDistribution distribution(const StepNodes& step) const {
    return materialize_distribution(*m_->graph, step, topics_.word_ids,
                                    m_->config.output_vocab_size);
  }

  // log p(token) under the combined distribution, as a graph node.
  NodeRef token_log_prob(const StepNodes& step, int token) const {
    Graph& g = *m_->graph;
    if (token < 0 ||
        static_cast<std::size_t>(token) >= m_->config.output_vocab_size)
      throw ContractError("token_log_prob: token outside output vocab");
    NodeRef lp = g.sub(g.pick(step.vocab_scores,
                              static_cast<std::size_t>(token)),
                       step.log_norm);
    if (step.topic_scores.valid()) {
      const auto& ids = topics_.word_ids;
      const auto it = std::find(ids.begin(), ids.end(), token);
      if (it != ids.end()) {
        NodeRef lp_topic =
            g.sub(g.pick(step.topic_scores,
                         static_cast<std::size_t>(it - ids.begin())),
                  step.log_norm);
        lp = g.logsumexp(g.concat({lp, lp_topic}));
      }
    }
    return lp;
  }

 private:
  const BoundModel* m_;
  EncoderOutput enc_;
  BoundTopics topics_;
  NodeRef init_state_;
};

// Teacher-forced negative log-likelihood of a response (which must end with
// EOS). Returns the loss node; call Graph::backward on it for gradients.
inline NodeRef sequence_nll(const BoundModel& m, std::span<const int> message,
                            std::span<const int> response,
                            const TopicContext& topics) {
  if (response.empty() || response.back() != kEosId)
    throw ContractError("sequence_nll: response must end with EOS");
  Graph& g = *m.graph;
  Decoder dec(m, message, topics);
  NodeRef state = dec.start_state();
  NodeRef total;
  for (std::size_t i = 0; i < response.size(); ++i) {
    const int y_prev = i == 0 ? kBosId : response[i - 1];
    StepNodes step = dec.step(y_prev, state);
    state = step.state;
    NodeRef lp = dec.token_log_prob(step, response[i]);
    total = i == 0 ? lp : g.add(total, lp);
  }
  return g.scale(total, -1.0);
}

// ---- decoding ------------------------------------------------------------

struct DecoderState {
  Tensor hidden;
  std::size_t step = 0;
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted ids; includes the final EOS if finished
  double log_prob = 0.0;
  DecoderState state;
  bool finished = false;

  std::vector<int> response() const {
    std::vector<int> out = tokens;
    if (finished && !out.empty()) out.pop_back();
    return out;
  }
};

struct BeamOptions {
  std::size_t width = 5;
  std::size_t max_len = 50;
  bool length_normalize = false;
};

namespace detail {

inline double beam_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize || h.tokens.empty()) return h.log_prob;
  return h.log_prob / static_cast<double>(h.tokens.size());
}

// Higher log-probability first; ties: earlier finishing, then lexicographic
// token ids. Keeps beam=1 aligned with greedy argmax.
inline bool beam_better(const Hypothesis& a, const Hypothesis& b,
                        bool length_normalize) {
  const double sa = beam_score(a, length_normalize);
  const double sb = beam_score(b, length_normalize);
  if (sa != sb) return sa > sb;
  if (a.tokens.size() != b.tokens.size())
    return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

}  // namespace detail

inline std::vector<Hypothesis> beam_search(const ModelParams& params,
                                           std::span<const int> message,
                                           const TopicContext& topics,
                                           const BeamOptions& opt) {
  if (opt.width < 1) throw ContractError("beam_search: width must be >= 1");
  if (opt.max_len < 1) throw ContractError("beam_search: max_len must be >= 1");
  Graph g;
  BoundModel bound = bind_frozen(g, params);
  Decoder dec(bound, message, topics);

  struct Live {
    std::vector<int> tokens;
    double log_prob = 0.0;
    NodeRef state;
  };
  std::vector<Live> live{{{}, 0.0, dec.start_state()}};
  std::vector<Hypothesis> pool;

  for (std::size_t len = 0; len < opt.max_len && !live.empty(); ++len) {
    std::vector<Live> candidates;
    for (const Live& hyp : live) {
      const int y_prev = hyp.tokens.empty() ? kBosId : hyp.tokens.back();
      StepNodes step = dec.step(y_prev, hyp.state);
      GenerationDistribution dist = dec.distribution(step);
      for (std::size_t w = 0; w < dist.probs.size(); ++w) {
        Live next = hyp;
        next.tokens.push_back(static_cast<int>(w));
        next.log_prob += std::log(dist.probs[w]);
        next.state = step.state;
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Live& a, const Live& b) {
                if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                return a.tokens < b.tokens;
              });
    if (candidates.size() > opt.width) candidates.resize(opt.width);
    live.clear();
    for (Live& c : candidates) {
      if (c.tokens.back() == kEosId) {
        Hypothesis h;
        h.tokens = std::move(c.tokens);
        h.log_prob = c.log_prob;
        h.finished = true;
        h.state = {g.value(c.state), h.tokens.size()};
        pool.push_back(std::move(h));
      } else {
        live.push_back(std::move(c));
      }
    }
  }
  for (Live& c : live) {
    Hypothesis h;
    h.tokens = std::move(c.tokens);
    h.log_prob = c.log_prob;
    h.finished = false;
    h.state = {g.value(c.state), h.tokens.size()};
    pool.push_back(std::move(h));
  }
  std::sort(pool.begin(), pool.end(),
            [&opt](const Hypothesis& a, const Hypothesis& b) {
              return detail::beam_better(a, b, opt.length_normalize);
            });
  return pool;
}

// Argmax token per step until EOS or max_len. Returns the response tokens
// (EOS stripped).
inline std::vector<int> greedy_decode(const ModelParams& params,
                                      std::span<const int> message,
                                      const TopicContext& topics,
                                      std::size_t max_len) {
  if (max_len < 1) throw ContractError("greedy_decode: max_len must be >= 1");
  Graph g;
  BoundModel bound = bind_frozen(g, params);
  Decoder dec(bound, message, topics);
  NodeRef state = dec.start_state();
  std::vector<int> tokens;
  int y_prev = kBosId;
  for (std::size_t i = 0; i < max_len; ++i) {
    StepNodes step = dec.step(y_prev, state);
    GenerationDistribution dist = dec.distribution(step);
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(dist.probs.begin(),
                                                  dist.probs.end()) -
                                 dist.probs.begin());
    if (static_cast<int>(best) == kEosId) break;
    tokens.push_back(static_cast<int>(best));
    y_prev = static_cast<int>(best);
    state = step.state;
  }
  return tokens;
}

}  // namespace taseq
