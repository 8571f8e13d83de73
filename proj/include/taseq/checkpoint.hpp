#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "taseq/adadelta.hpp"
#include "taseq/corpus.hpp"
#include "taseq/seq2seq.hpp"
#include "taseq/training.hpp"

namespace taseq {

// Self-describing binary container: model config, vocabularies, every named
// tensor (parameters plus optimizer accumulators), and the training-state
// snapshot, guarded by an FNV-1a digest. save(load(x)) is byte-identical.
struct Checkpoint {
  ModelConfig config;
  Vocabulary message_vocab;
  Vocabulary output_vocab;
  std::vector<std::pair<std::string, Tensor>> tensors;
  TrainProgress progress;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'T', 'A', 'S', 'E',
                                             'Q', 'C', 'K', '1'};

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

inline void put_blob(std::string& out, const std::string& blob) {
  put_u64(out, blob.size());
  out += blob;
}

inline void put_f64(std::string& out, const double* data, std::size_t n) {
  const std::size_t bytes = n * sizeof(double);
  const std::size_t off = out.size();
  out.resize(off + bytes);
  std::memcpy(out.data() + off, data, bytes);
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need_(8);
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  std::string blob() {
    const std::uint64_t n = u64();
    need_(n);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::vector<double> f64(std::size_t n) {
    need_(n * sizeof(double));
    std::vector<double> out(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need_(std::uint64_t n) {
    if (pos_ + n > bytes_.size())
      throw DataError("checkpoint: truncated payload");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

inline std::string serialize_model_config(const ModelConfig& c) {
  std::ostringstream out;
  out << "hidden_size=" << c.hidden_size << '\n'
      << "embedding_size=" << c.embedding_size << '\n'
      << "message_vocab_size=" << c.message_vocab_size << '\n'
      << "output_vocab_size=" << c.output_vocab_size << '\n'
      << "topic_capacity=" << c.topic_capacity << '\n'
      << "topic_embedding_dim=" << c.topic_embedding_dim << '\n'
      << "topic_stoplist=" << c.topic_stoplist << '\n'
      << "attention_hidden=" << c.attention_hidden << '\n'
      << "variant=" << variant_name(c.variant) << '\n';
  return out.str();
}

inline ModelConfig parse_model_config(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("checkpoint: malformed config line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "hidden_size") c.hidden_size = std::stoull(value);
    else if (key == "embedding_size") c.embedding_size = std::stoull(value);
    else if (key == "message_vocab_size") c.message_vocab_size = std::stoull(value);
    else if (key == "output_vocab_size") c.output_vocab_size = std::stoull(value);
    else if (key == "topic_capacity") c.topic_capacity = std::stoull(value);
    else if (key == "topic_embedding_dim") c.topic_embedding_dim = std::stoull(value);
    else if (key == "topic_stoplist") c.topic_stoplist = std::stoull(value);
    else if (key == "attention_hidden") c.attention_hidden = std::stoull(value);
    else if (key == "variant") c.variant = variant_from_name(value);
    else throw DataError("checkpoint: unknown config key: " + key);
  }
  return c;
}

inline std::string serialize_vocab(const Vocabulary& v) {
  std::string out;
  for (const std::string& t : v.tokens()) {
    out += t;
    out += '\n';
  }
  return out;
}

inline Vocabulary parse_vocab(const std::string& text) {
  Vocabulary v;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= kReservedCount) {
      if (line != reserved_symbol(static_cast<int>(line_no) - 1))
        throw DataError("checkpoint: bad vocabulary reserved header");
      continue;
    }
    v.add(line);
  }
  return v;
}

inline std::string serialize_progress(const TrainProgress& p) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "epoch=" << p.epoch << '\n'
      << "batches_done=" << p.batches_done << '\n'
      << "step=" << p.step << '\n'
      << "pass=" << p.pass << '\n'
      << "best_ppl=" << p.best_ppl << '\n'
      << "best_pass=" << p.best_pass << '\n'
      << "schedule=" << p.schedule_state << '\n'
      << "rng=" << p.rng_state << '\n';
  return out.str();
}

inline TrainProgress parse_progress(const std::string& text) {
  TrainProgress p;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("checkpoint: malformed progress line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "epoch") p.epoch = std::stoull(value);
    else if (key == "batches_done") p.batches_done = std::stoull(value);
    else if (key == "step") p.step = std::stoull(value);
    else if (key == "pass") p.pass = std::stoull(value);
    else if (key == "best_ppl") p.best_ppl = std::stod(value);
    else if (key == "best_pass") p.best_pass = std::stoull(value);
    else if (key == "schedule") p.schedule_state = value;
    else if (key == "rng") p.rng_state = value;
    else throw DataError("checkpoint: unknown progress key: " + key);
  }
  return p;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string payload;
  detail::put_blob(payload, detail::serialize_model_config(ckpt.config));
  detail::put_blob(payload, detail::serialize_vocab(ckpt.message_vocab));
  detail::put_blob(payload, detail::serialize_vocab(ckpt.output_vocab));
  detail::put_u64(payload, ckpt.tensors.size());
  for (const auto& [name, tensor] : ckpt.tensors) {
    detail::put_blob(payload, name);
    detail::put_u64(payload, tensor.shape.size());
    for (std::size_t d : tensor.shape) detail::put_u64(payload, d);
    detail::put_f64(payload, tensor.data.data(), tensor.data.size());
  }
  detail::put_blob(payload, detail::serialize_progress(ckpt.progress));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_checkpoint: cannot write " + path);
  out.write(detail::kCheckpointMagic, 8);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  std::string header;
  detail::put_u64(header, payload.size());
  out.write(header.data(), 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint64_t digest = detail::fnv1a64(payload);
  out.write(reinterpret_cast<const char*>(&digest), 8);
  if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw DataError("load_checkpoint: not a taseq checkpoint: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != 1)
    throw DataError("load_checkpoint: unsupported version " +
                    std::to_string(version));
  std::uint64_t payload_len = 0;
  in.read(reinterpret_cast<char*>(&payload_len), 8);
  std::string payload(payload_len, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_len));
  std::uint64_t digest = 0;
  in.read(reinterpret_cast<char*>(&digest), 8);
  if (!in) throw DataError("load_checkpoint: truncated file " + path);
  if (detail::fnv1a64(payload) != digest)
    throw DataError("load_checkpoint: digest mismatch, corrupt file " + path);

  detail::ByteReader reader(payload);
  Checkpoint ckpt;
  ckpt.config = detail::parse_model_config(reader.blob());
  ckpt.message_vocab = detail::parse_vocab(reader.blob());
  ckpt.output_vocab = detail::parse_vocab(reader.blob());
  const std::uint64_t tensor_count = reader.u64();
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    std::string name = reader.blob();
    const std::uint64_t ndim = reader.u64();
    std::vector<std::size_t> shape(ndim);
    std::size_t numel = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
      shape[d] = reader.u64();
      numel *= shape[d];
    }
    Tensor t(shape, reader.f64(numel));
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  ckpt.progress = detail::parse_progress(reader.blob());
  if (!reader.done()) throw DataError("load_checkpoint: trailing bytes");
  return ckpt;
}

// ---- conversions ----------------------------------------------------------

inline Checkpoint make_checkpoint(const ModelParams& params,
                                  const Vocabulary& message_vocab,
                                  const Vocabulary& output_vocab,
                                  const AdaDelta* optimizer,
                                  const TrainProgress& progress) {
  Checkpoint ckpt;
  ckpt.config = params.config;
  ckpt.message_vocab = message_vocab;
  ckpt.output_vocab = output_vocab;
  ckpt.progress = progress;
  for (const Parameter* p : params.all())
    ckpt.tensors.emplace_back("param:" + p->name, p->value);
  if (optimizer) {
    for (const auto& [name, state] : optimizer->states()) {
      ckpt.tensors.emplace_back("adadelta.g2:" + name, state.accum_grad_sq);
      ckpt.tensors.emplace_back("adadelta.dx2:" + name,
                                state.accum_update_sq);
    }
  }
  return ckpt;
}

inline ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params = ModelParams::init(ckpt.config, 0.01, 0);
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : params.all()) by_name[p->name] = p;
  std::size_t restored = 0;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind("param:", 0) != 0) continue;
    auto it = by_name.find(name.substr(6));
    if (it == by_name.end())
      throw DataError("checkpoint: unknown parameter " + name);
    if (!it->second->value.same_shape(tensor))
      throw DataError("checkpoint: shape mismatch for " + name);
    it->second->value = tensor;
    ++restored;
  }
  if (restored != by_name.size())
    throw DataError("checkpoint: missing parameters for variant " +
                    std::string(variant_name(ckpt.config.variant)));
  return params;
}

inline TrainResume resume_from_checkpoint(const Checkpoint& ckpt) {
  TrainResume resume;
  resume.progress = ckpt.progress;
  std::map<std::string, AdaDeltaState> partial;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind("adadelta.g2:", 0) == 0)
      partial[name.substr(12)].accum_grad_sq = tensor;
    else if (name.rfind("adadelta.dx2:", 0) == 0)
      partial[name.substr(13)].accum_update_sq = tensor;
  }
  resume.optimizer_state = std::move(partial);
  return resume;
}

// Debug surface: every tensor as readable text.
inline void dump_tensors_text(const Checkpoint& ckpt, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [name, tensor] : ckpt.tensors) {
    out << name << " shape";
    for (std::size_t d : tensor.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < tensor.numel(); ++i) {
      out << tensor.data[i];
      out << ((i + 1) % 8 == 0 || i + 1 == tensor.numel() ? '\n' : ' ');
    }
  }
}

}  // namespace taseq
