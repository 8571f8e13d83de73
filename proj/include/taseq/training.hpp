#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "taseq/adadelta.hpp"
#include "taseq/eval.hpp"
#include "taseq/seq2seq.hpp"

namespace taseq {

struct TrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 1.0;
  std::size_t validate_every = 0;  // optimizer steps; 0 = once per epoch
  std::size_t stop_window = 5;
  double stop_threshold = 2.0;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 1;
  double adadelta_rho = 0.95;
  double adadelta_epsilon = 1e-6;
  double grad_clip = 0.0;  // global-norm clip; 0 disables

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(learning_rate > 0.0))
      throw ConfigError("train: learning_rate must be > 0");
    if (!(stop_threshold > 0.0))
      throw ConfigError("train: stop_threshold must be > 0");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  }
};

// Learning-rate halving plus the convergence rule: halve when validation
// perplexity increases; halt once the improvement stays below the threshold
// for `window` consecutive validation passes.
class TrainingSchedule {
 public:
  TrainingSchedule(double initial_lr, std::size_t window, double threshold)
      : lr_(initial_lr), window_(window), threshold_(threshold) {}

  void observe(double validation_ppl) {
    if (has_previous_) {
      if (validation_ppl > previous_) lr_ *= 0.5;
      const double improvement = previous_ - validation_ppl;
      if (improvement < threshold_)
        ++below_threshold_;
      else
        below_threshold_ = 0;
    }
    previous_ = validation_ppl;
    has_previous_ = true;
  }

  double learning_rate() const { return lr_; }
  bool should_stop() const { return below_threshold_ >= window_; }

  std::string save_state() const {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << lr_ << ' ' << (has_previous_ ? 1 : 0) << ' ' << previous_ << ' '
        << below_threshold_;
    return out.str();
  }

  void restore_state(const std::string& text) {
    std::istringstream in(text);
    int flag = 0;
    in >> lr_ >> flag >> previous_ >> below_threshold_;
    if (!in) throw DataError("TrainingSchedule: malformed state");
    has_previous_ = flag != 0;
  }

 private:
  double lr_;
  std::size_t window_;
  double threshold_;
  double previous_ = 0.0;
  bool has_previous_ = false;
  std::size_t below_threshold_ = 0;
};

// Padded minibatch with masks. PAD never receives loss: each row's true
// extent is given by its mask.
struct Batch {
  std::vector<std::size_t> examples;
  std::vector<std::vector<int>> message, response;
  std::vector<std::vector<std::uint8_t>> message_mask, response_mask;

  std::size_t size() const { return examples.size(); }
};

namespace detail {

inline void pad_rows(const std::vector<std::vector<int>>& rows,
                     std::vector<std::vector<int>>& padded,
                     std::vector<std::vector<std::uint8_t>>& masks) {
  std::size_t longest = 0;
  for (const auto& r : rows) longest = std::max(longest, r.size());
  for (const auto& r : rows) {
    std::vector<int> p = r;
    std::vector<std::uint8_t> m(r.size(), 1);
    p.resize(longest, kPadId);
    m.resize(longest, 0);
    padded.push_back(std::move(p));
    masks.push_back(std::move(m));
  }
}

}  // namespace detail

// Shuffles example order with the supplied rng (one permutation per call,
// i.e. per epoch) and pads each batch to its longest member.
inline std::vector<Batch> make_batches(const EncodedDataset& data,
                                       std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ContractError("make_batches: batch_size >= 1");
  std::vector<std::size_t> order(data.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    const std::size_t end = std::min(start + batch_size, order.size());
    std::vector<std::vector<int>> msgs, resps;
    for (std::size_t i = start; i < end; ++i) {
      const EncodedExample& e = data.examples[order[i]];
      b.examples.push_back(order[i]);
      msgs.push_back(e.message);
      resps.push_back(e.response);
    }
    detail::pad_rows(msgs, b.message, b.message_mask);
    detail::pad_rows(resps, b.response, b.response_mask);
    batches.push_back(std::move(b));
  }
  return batches;
}

// Masked batch loss: the sum of per-example sequence NLLs, with each row's
// sequences recovered from the padded matrices through the masks.
inline NodeRef batch_nll(const BoundModel& bound, const EncodedDataset& data,
                         const Batch& batch) {
  Graph& g = *bound.graph;
  NodeRef total;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    std::size_t msg_len = 0, resp_len = 0;
    while (msg_len < batch.message_mask[r].size() &&
           batch.message_mask[r][msg_len])
      ++msg_len;
    while (resp_len < batch.response_mask[r].size() &&
           batch.response_mask[r][resp_len])
      ++resp_len;
    std::span<const int> msg(batch.message[r].data(), msg_len);
    std::span<const int> resp(batch.response[r].data(), resp_len);
    NodeRef nll = sequence_nll(bound, msg, resp,
                               data.context_of(data.examples[batch.examples[r]]));
    total = r == 0 ? nll : g.add(total, nll);
  }
  return total;
}

struct ValidationRecord {
  std::size_t pass = 0;
  std::size_t epoch = 0;
  std::size_t step = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;  // mean per-pair NLL since the previous pass
  PerplexityResult ppl_response;
  PerplexityResult ppl_token;
};

// Everything a checkpoint needs to freeze and later resume a run.
struct TrainProgress {
  std::size_t epoch = 0;         // current epoch index
  std::size_t batches_done = 0;  // batches consumed within that epoch
  std::size_t step = 0;
  std::size_t pass = 0;
  double best_ppl = std::numeric_limits<double>::infinity();
  std::size_t best_pass = 0;
  std::string schedule_state;
  std::string rng_state;  // state before the current epoch's shuffle
};

struct TrainSnapshot {
  ValidationRecord record;
  bool is_best = false;
  TrainProgress progress;
  const ModelParams* params = nullptr;
  const AdaDelta* optimizer = nullptr;
};

using ValidationHook = std::function<void(const TrainSnapshot&)>;

struct TrainResume {
  TrainProgress progress;
  std::map<std::string, AdaDeltaState> optimizer_state;
};

struct TrainResult {
  std::vector<ValidationRecord> history;
  std::size_t best_pass = 0;
  bool stopped_early = false;
};

// Batched teacher-forced training with AdaDelta. Per validation pass the
// schedule observes the per-response perplexity (both modes are logged),
// halving the learning rate on regressions and halting after `stop_window`
// consecutive sub-threshold improvements.
inline TrainResult train(ModelParams& params, const TrainConfig& cfg,
                         const EncodedDataset& train_data,
                         const EncodedDataset& valid_data,
                         std::ostream* log = nullptr,
                         const ValidationHook& hook = {},
                         const TrainResume* resume = nullptr) {
  cfg.validate();
  if (train_data.examples.empty())
    throw ContractError("train: empty training set");
  if (valid_data.examples.empty())
    throw ContractError("train: empty validation set");

  AdaDelta optimizer(cfg.adadelta_rho, cfg.adadelta_epsilon);
  TrainingSchedule schedule(cfg.learning_rate, cfg.stop_window,
                            cfg.stop_threshold);
  Rng rng(cfg.seed);
  TrainProgress progress;
  if (resume) {
    progress = resume->progress;
    schedule.restore_state(progress.schedule_state);
    rng.restore_state(progress.rng_state);
    for (const auto& [name, state] : resume->optimizer_state)
      optimizer.set_state(name, state);
  }

  std::vector<Parameter*> param_list = params.all();
  TrainResult result;
  result.best_pass = progress.best_pass;
  double loss_sum = 0.0;
  std::size_t loss_pairs = 0;

  if (log)
    *log << "pass\tepoch\tstep\tlearning_rate\ttrain_loss\tppl_d\tppl_t\n";

  auto validate = [&](std::size_t epoch) {
    LogLikelihoodTotals totals = response_log_likelihood(params, valid_data);
    ValidationRecord rec;
    rec.pass = ++progress.pass;
    rec.epoch = epoch;
    rec.step = progress.step;
    rec.train_loss = loss_pairs == 0 ? 0.0
                                     : loss_sum / static_cast<double>(loss_pairs);
    rec.ppl_response =
        perplexity_from_totals(totals, PerplexityMode::kPerResponse);
    rec.ppl_token = perplexity_from_totals(totals, PerplexityMode::kPerToken);
    loss_sum = 0.0;
    loss_pairs = 0;

    schedule.observe(rec.ppl_response.value);
    rec.learning_rate = schedule.learning_rate();

    bool is_best = false;
    if (rec.ppl_response.value < progress.best_ppl) {
      progress.best_ppl = rec.ppl_response.value;
      progress.best_pass = rec.pass;
      is_best = true;
    }
    result.best_pass = progress.best_pass;
    result.history.push_back(rec);
    if (log) {
      *log << std::setprecision(
          std::numeric_limits<double>::max_digits10);
      *log << rec.pass << '\t' << rec.epoch << '\t' << rec.step << '\t'
           << rec.learning_rate << '\t' << rec.train_loss << '\t'
           << rec.ppl_response.value << '\t' << rec.ppl_token.value << '\n';
      log->flush();
    }
    if (hook) {
      TrainSnapshot snap;
      snap.record = rec;
      snap.is_best = is_best;
      progress.schedule_state = schedule.save_state();
      snap.progress = progress;
      snap.params = &params;
      snap.optimizer = &optimizer;
      hook(snap);
    }
    return schedule.should_stop();
  };

  for (; progress.epoch < cfg.max_epochs; ++progress.epoch,
         progress.batches_done = 0) {
    progress.rng_state = rng.save_state();
    std::vector<Batch> batches =
        make_batches(train_data, cfg.batch_size, rng);
    bool halted = false;
    for (std::size_t bi = progress.batches_done; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      Graph g;
      BoundModel bound = bind_trainable(g, params);
      double batch_loss = 0.0;
      try {
        NodeRef total = batch_nll(bound, train_data, batch);
        NodeRef loss =
            g.scale(total, 1.0 / static_cast<double>(batch.size()));
        batch_loss = g.value(total).data[0];
        params.zero_grad();
        g.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("train: non-finite loss in epoch " +
                           std::to_string(progress.epoch) + ", batch " +
                           std::to_string(bi) + ": " + e.what());
      }
      if (cfg.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (Parameter* p : param_list)
          for (double v : p->grad.data) norm_sq += v * v;
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.grad_clip) {
          const double factor = cfg.grad_clip / norm;
          for (Parameter* p : param_list)
            for (double& v : p->grad.data) v *= factor;
        }
      }
      optimizer.step(param_list, schedule.learning_rate());
      loss_sum += batch_loss;
      loss_pairs += batch.size();
      ++progress.step;
      progress.batches_done = bi + 1;
      if (cfg.validate_every > 0 && progress.step % cfg.validate_every == 0) {
        if (validate(progress.epoch)) {
          halted = true;
          break;
        }
      }
    }
    if (!halted && cfg.validate_every == 0) {
      // Snapshot points at the next epoch; the rng has already consumed this
      // epoch's shuffle, so its current state is the next epoch's pre-shuffle
      // state.
      progress.batches_done = 0;
      ++progress.epoch;
      progress.rng_state = rng.save_state();
      halted = validate(progress.epoch);
      --progress.epoch;  // loop increment restores it
    }
    if (halted) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace taseq
