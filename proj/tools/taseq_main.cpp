// taseq: topic-aware response generation pipeline.
//
// Subcommands: lda-train, lda-topics, prepare, train, generate, chat, eval.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "taseq/checkpoint.hpp"
#include "taseq/config.hpp"
#include "taseq/pipeline.hpp"
#include "taseq/training.hpp"

namespace fs = std::filesystem;
using namespace taseq;

namespace {

bool g_verbose = false;

void note(const std::string& message) {
  if (g_verbose) std::cerr << "[taseq] " << message << '\n';
}

// Topic-word machinery shared by train / generate / chat / eval.
struct TopicSetup {
  LdaModel lda;
  TopicInventory inventory;
  std::vector<TopicContext> contexts;
};

TopicSetup load_topic_setup(const std::string& lda_path, std::size_t capacity,
                            std::size_t stoplist_size,
                            const Vocabulary& output_vocab) {
  TopicSetup setup;
  setup.lda = load_lda_model(lda_path);
  auto stoplist = frequency_stoplist(setup.lda, stoplist_size);
  setup.inventory = build_topic_inventory(setup.lda, capacity, stoplist);
  setup.contexts = make_topic_contexts(setup.inventory, output_vocab);
  return setup;
}

std::vector<std::string> tokens_to_strings(const Vocabulary& vocab,
                                           const std::vector<int>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab.token_of(id));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct LoadedModel {
  Checkpoint ckpt;
  ModelParams params;
  std::optional<TopicSetup> topics;
};

LoadedModel load_model(const std::string& ckpt_path,
                       const std::string& lda_path) {
  LoadedModel m{load_checkpoint(ckpt_path), ModelParams{}, std::nullopt};
  m.params = params_from_checkpoint(m.ckpt);
  if (m.params.config.uses_topics()) {
    if (lda_path.empty())
      throw ConfigError("this checkpoint's variant needs --lda MODEL");
    m.topics = load_topic_setup(lda_path, m.params.config.topic_capacity,
                                m.params.config.topic_stoplist,
                                m.ckpt.output_vocab);
  }
  return m;
}

// Response for one raw message line; never throws on OOV-only input.
std::vector<std::string> respond(const LoadedModel& m,
                                 const std::string& line, std::size_t beam,
                                 std::size_t max_len, bool greedy,
                                 bool length_normalize, int* topic_out) {
  const std::vector<std::string> words = detail::split_tokens(line);
  std::vector<int> message = encode(m.ckpt.message_vocab, words);
  if (message.empty()) message.push_back(kUnkId);

  TopicContext ctx;
  if (m.topics) {
    const int z = resolve_topic(m.topics->lda, words, m.topics->contexts);
    if (topic_out) *topic_out = z;
    ctx = m.topics->contexts[static_cast<std::size_t>(z)];
  } else if (topic_out) {
    *topic_out = -1;
  }

  std::vector<int> response_ids;
  if (greedy || beam == 1) {
    response_ids = greedy_decode(m.params, message, ctx, max_len);
  } else {
    BeamOptions opt;
    opt.width = beam;
    opt.max_len = max_len;
    opt.length_normalize = length_normalize;
    auto pool = beam_search(m.params, message, ctx, opt);
    if (!pool.empty()) response_ids = pool.front().response();
  }
  return tokens_to_strings(m.ckpt.output_vocab, response_ids);
}

// ---- subcommands -----------------------------------------------------------

int cmd_lda_train(const std::string& docs_path, std::size_t topics,
                  const std::string& alpha_text, double beta, double gamma,
                  std::size_t iters, std::uint64_t seed,
                  const std::string& out_path) {
  LdaHyperparams hyper = LdaHyperparams::defaults(topics);
  if (alpha_text != "auto") {
    try {
      hyper.alpha = std::stod(alpha_text);
    } catch (const std::exception&) {
      throw ConfigError("--alpha expects a number or 'auto'");
    }
  }
  hyper.beta = beta;
  hyper.gamma = gamma;
  hyper.iterations = iters;
  hyper.seed = seed;
  hyper.validate();

  auto docs = load_documents(docs_path);
  note("training LDA on " + std::to_string(docs.size()) + " documents");
  GibbsSampler sampler(docs, hyper);
  for (std::size_t i = 0; i < hyper.iterations; ++i) {
    sampler.sweep();
    if (g_verbose && (i + 1) % 50 == 0)
      note("sweep " + std::to_string(i + 1) + "/" +
           std::to_string(hyper.iterations));
  }
  LdaModel model = std::move(sampler).take_model();
  save_lda_model(model, out_path);
  std::cout << "lda-train: " << model.vocab.size() << " words, "
            << model.units.size() << " units, " << topics << " topics -> "
            << out_path << '\n';
  return 0;
}

int cmd_lda_topics(const std::string& model_path, int topic, std::size_t n,
                   std::size_t stoplist_size, bool all_topics) {
  LdaModel model = load_lda_model(model_path);
  if (!all_topics &&
      (topic < 0 || static_cast<std::size_t>(topic) >= model.topic_count()))
    throw ConfigError("--topic out of range: model has " +
                      std::to_string(model.topic_count()) + " topics");
  auto stoplist = frequency_stoplist(model, stoplist_size);
  const std::size_t first = all_topics ? 0 : static_cast<std::size_t>(topic);
  const std::size_t last =
      all_topics ? model.topic_count() : static_cast<std::size_t>(topic) + 1;
  for (std::size_t z = first; z < last; ++z) {
    TopicWordSet set = topic_words(model, static_cast<int>(z), n, stoplist);
    std::cout << "topic " << z << " (" << set.size() << " words)\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
      const int w = model.word_id(set.words[i]);
      std::cout << "  " << set.words[i] << '\t'
                << model.word_topic[static_cast<std::size_t>(w)][z] << '\n';
    }
  }
  return 0;
}

int cmd_prepare(const RunConfig& cfg) {
  if (cfg.train_pairs.empty())
    throw ConfigError("prepare: config must set train_pairs");
  auto pairs = load_pairs(cfg.train_pairs, cfg.max_pair_len, cfg.max_pair_dup);
  note("loaded " + std::to_string(pairs.size()) + " pairs");
  Vocabulary msg_vocab =
      build_vocabulary(pairs, Side::kMessage, cfg.message_vocab_size);
  Vocabulary resp_vocab =
      build_vocabulary(pairs, Side::kResponse, cfg.response_vocab_size);

  Vocabulary out_vocab = resp_vocab;
  const Variant variant = variant_from_name(cfg.variant);
  if (variant != Variant::kS2SA) {
    LdaModel lda = load_lda_model(cfg.lda_model);
    auto stoplist = frequency_stoplist(lda, cfg.stoplist_size);
    TopicInventory inventory =
        build_topic_inventory(lda, cfg.topic_words, stoplist);
    out_vocab = build_output_vocabulary(resp_vocab, inventory);
  }

  save_vocabulary(msg_vocab, cfg.message_vocab);
  save_vocabulary(out_vocab, cfg.output_vocab);

  CorpusStats stats = corpus_stats(pairs, msg_vocab, out_vocab);
  std::cout << "prepare: " << stats.pair_count << " pairs, "
            << stats.message_tokens << " message tokens, "
            << stats.response_tokens << " response tokens\n";
  std::cout << "message vocabulary: " << msg_vocab.size() << " entries ("
            << stats.message_coverage * 100.0 << "% coverage) -> "
            << cfg.message_vocab << '\n';
  std::cout << "output vocabulary: " << out_vocab.size() << " entries ("
            << stats.response_coverage * 100.0 << "% coverage) -> "
            << cfg.output_vocab << '\n';
  return 0;
}

ModelConfig model_config_from(const RunConfig& cfg,
                              const Vocabulary& msg_vocab,
                              const Vocabulary& out_vocab,
                              const LdaModel* lda) {
  ModelConfig mc;
  mc.hidden_size = cfg.hidden_size;
  mc.embedding_size = cfg.embedding_size;
  mc.attention_hidden = cfg.attention_hidden;
  mc.message_vocab_size = msg_vocab.size();
  mc.output_vocab_size = out_vocab.size();
  mc.topic_capacity = cfg.topic_words;
  mc.topic_stoplist = cfg.stoplist_size;
  mc.variant = variant_from_name(cfg.variant);
  mc.topic_embedding_dim = lda ? lda->topic_count() : 0;
  mc.validate();
  return mc;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_path) {
  if (cfg.train_pairs.empty() || cfg.valid_pairs.empty())
    throw ConfigError("train: config must set train_pairs and valid_pairs");
  auto train_pairs =
      load_pairs(cfg.train_pairs, cfg.max_pair_len, cfg.max_pair_dup);
  auto valid_pairs =
      load_pairs(cfg.valid_pairs, cfg.max_pair_len, cfg.max_pair_dup);
  Vocabulary msg_vocab = load_vocabulary(cfg.message_vocab);
  Vocabulary out_vocab = load_vocabulary(cfg.output_vocab);

  const Variant variant = variant_from_name(cfg.variant);
  std::optional<TopicSetup> topics;
  if (variant != Variant::kS2SA)
    topics = load_topic_setup(cfg.lda_model, cfg.topic_words,
                              cfg.stoplist_size, out_vocab);

  ModelConfig mc = model_config_from(cfg, msg_vocab, out_vocab,
                                     topics ? &topics->lda : nullptr);

  ModelParams params = ModelParams::init(mc, cfg.init_std, cfg.seed);
  TrainResume resume;
  bool resuming = false;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (detail::serialize_model_config(ckpt.config) !=
        detail::serialize_model_config(mc))
      throw ConfigError("train: --resume checkpoint was built with a "
                        "different model configuration");
    params = params_from_checkpoint(ckpt);
    resume = resume_from_checkpoint(ckpt);
    resuming = true;
    note("resuming from pass " + std::to_string(resume.progress.pass));
  }

  EncodedDataset train_data =
      encode_dataset(train_pairs, msg_vocab, out_vocab,
                     topics ? &topics->lda : nullptr,
                     topics ? topics->contexts : std::vector<TopicContext>{},
                     variant != Variant::kS2SA);
  EncodedDataset valid_data =
      encode_dataset(valid_pairs, msg_vocab, out_vocab,
                     topics ? &topics->lda : nullptr,
                     topics ? topics->contexts : std::vector<TopicContext>{},
                     variant != Variant::kS2SA);

  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.validate_every = cfg.validate_every;
  tc.stop_window = cfg.stop_window;
  tc.stop_threshold = cfg.stop_threshold;
  tc.max_epochs = cfg.max_epochs;
  tc.seed = cfg.seed;
  tc.adadelta_rho = cfg.adadelta_rho;
  tc.adadelta_epsilon = cfg.adadelta_epsilon;
  tc.grad_clip = cfg.grad_clip;

  fs::create_directories(cfg.checkpoint_dir);
  std::ofstream log(cfg.train_log);
  if (!log) throw DataError("train: cannot write log file " + cfg.train_log);

  auto hook = [&](const TrainSnapshot& snap) {
    Checkpoint ckpt = make_checkpoint(*snap.params, msg_vocab, out_vocab,
                                      snap.optimizer, snap.progress);
    const std::string pass_path =
        (fs::path(cfg.checkpoint_dir) /
         ("checkpoint-" + std::to_string(snap.record.pass) + ".ckpt"))
            .string();
    save_checkpoint(ckpt, pass_path);
    if (snap.is_best)
      save_checkpoint(ckpt,
                      (fs::path(cfg.checkpoint_dir) / "best.ckpt").string());
    note("pass " + std::to_string(snap.record.pass) + ": ppl_d " +
         std::to_string(snap.record.ppl_response.value) +
         (snap.is_best ? " (best)" : ""));
  };

  TrainResult result = train(params, tc, train_data, valid_data, &log, hook,
                             resuming ? &resume : nullptr);
  std::cout << "train: " << result.history.size() << " validation passes"
            << (result.stopped_early ? " (converged)" : "") << ", best pass "
            << result.best_pass << '\n';
  std::cout << "checkpoints in " << cfg.checkpoint_dir << ", log in "
            << cfg.train_log << '\n';
  return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& lda_path,
                 const std::string& input_path, const std::string& out_path,
                 std::size_t beam, std::size_t max_len, bool greedy,
                 bool length_normalize) {
  LoadedModel model = load_model(ckpt_path, lda_path);
  std::ifstream in(input_path);
  if (!in) throw DataError("generate: cannot open " + input_path);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw DataError("generate: cannot write " + out_path);
    out = &file;
  }

  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    line = detail::strip_cr(std::move(line));
    auto response =
        respond(model, line, beam, max_len, greedy, length_normalize, nullptr);
    *out << join_tokens(response) << '\n';
    ++count;
  }
  if (!out_path.empty())
    std::cout << "generate: " << count << " responses -> " << out_path << '\n';
  return 0;
}

int cmd_chat(const std::string& ckpt_path, const std::string& lda_path,
             std::size_t beam, std::size_t max_len,
             const std::string& transcript_path) {
  LoadedModel model = load_model(ckpt_path, lda_path);
  std::ofstream transcript;
  if (!transcript_path.empty()) {
    transcript.open(transcript_path);
    if (!transcript)
      throw DataError("chat: cannot write " + transcript_path);
  }

  std::cout << "taseq chat (" << variant_name(model.params.config.variant)
            << "); :quit to exit\n";
  std::string line;
  while (std::getline(std::cin, line)) {
    line = detail::strip_cr(std::move(line));
    if (line == ":quit") break;
    if (detail::split_tokens(line).empty()) continue;
    try {
      int topic = -1;
      auto response =
          respond(model, line, beam, max_len, false, false, &topic);
      if (topic >= 0 && model.topics) {
        const auto& words =
            model.topics->inventory.sets[static_cast<std::size_t>(topic)].words;
        std::cout << "topic " << topic << ":";
        for (std::size_t i = 0; i < std::min<std::size_t>(words.size(), 8); ++i)
          std::cout << ' ' << words[i];
        std::cout << '\n';
      }
      const std::string text = join_tokens(response);
      std::cout << text << '\n';
      if (transcript.is_open()) {
        transcript << "user\t" << line << '\n';
        transcript << "taseq\t" << text << '\n';
        transcript.flush();
      }
    } catch (const Error& e) {
      std::cerr << "chat: decoding failed: " << e.what() << '\n';
    }
  }
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& lda_path,
             const std::string& test_path, const std::string& annotations_path,
             const std::string& out_path, std::size_t beam,
             std::size_t max_len) {
  LoadedModel model = load_model(ckpt_path, lda_path);
  auto pairs = load_pairs(test_path);

  EncodedDataset data = encode_dataset(
      pairs, model.ckpt.message_vocab, model.ckpt.output_vocab,
      model.topics ? &model.topics->lda : nullptr,
      model.topics ? model.topics->contexts : std::vector<TopicContext>{},
      model.params.config.uses_topics());

  LogLikelihoodTotals totals = response_log_likelihood(model.params, data);
  EvalReport report;
  report.ppl_response =
      perplexity_from_totals(totals, PerplexityMode::kPerResponse);
  report.ppl_token = perplexity_from_totals(totals, PerplexityMode::kPerToken);

  // Generated responses (beam top-1) feed the diversity metrics.
  std::vector<std::vector<std::string>> generated;
  generated.reserve(pairs.size());
  for (const TokenizedPair& p : pairs)
    generated.push_back(respond(model, join_tokens(p.message), beam, max_len,
                                false, false, nullptr));
  report.distinct1 = distinct_n(generated, 1);
  report.distinct2 = distinct_n(generated, 2);

  if (!annotations_path.empty())
    report.kappa = fleiss_kappa(load_annotations(annotations_path));

  write_report_table(report, std::cout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw DataError("eval: cannot write " + out_path);
    write_report_table(report, out);
    out << '\n';
    write_report_keyvalues(report, out);
    std::cout << "report -> " << out_path << '\n';
  } else {
    write_report_keyvalues(report, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taseq: topic-aware sequence-to-sequence response generation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed_override = 0;
  app.add_option("--config", config_path, "Run configuration file");
  auto* seed_opt =
      app.add_option("--seed", seed_override, "Override the config seed");
  app.add_flag("--verbose", g_verbose, "Chatty progress output");

  // lda-train
  auto* lda_train = app.add_subcommand("lda-train", "Train the Twitter LDA model");
  std::string lt_docs, lt_alpha = "auto", lt_out = "lda.model";
  std::size_t lt_topics = 200, lt_iters = 100;
  double lt_beta = 0.01, lt_gamma = 0.01;
  std::uint64_t lt_seed = 0;
  auto* lt_docs_opt = lda_train->add_option("--docs", lt_docs, "Document file");
  auto* lt_topics_opt = lda_train->add_option("--topics", lt_topics, "Topic count");
  lda_train->add_option("--alpha", lt_alpha, "Dirichlet prior or 'auto' (1/T)");
  auto* lt_beta_opt = lda_train->add_option("--beta", lt_beta, "Word prior");
  auto* lt_gamma_opt = lda_train->add_option("--gamma", lt_gamma, "Indicator prior");
  auto* lt_iters_opt = lda_train->add_option("--iters", lt_iters, "Gibbs sweeps");
  auto* lt_seed_opt = lda_train->add_option("--seed", lt_seed, "RNG seed");
  auto* lt_out_opt = lda_train->add_option("--out", lt_out, "Model output path");

  // lda-topics
  auto* lda_topics_cmd =
      app.add_subcommand("lda-topics", "List topic words of a trained model");
  std::string lp_model;
  int lp_topic = 0;
  std::size_t lp_n = 100, lp_stop = 2000;
  bool lp_all = false;
  lda_topics_cmd->add_option("--model", lp_model, "LDA model file")->required();
  lda_topics_cmd->add_option("--topic", lp_topic, "Topic id");
  lda_topics_cmd->add_option("--n", lp_n, "Words per topic");
  lda_topics_cmd->add_option("--stoplist-size", lp_stop, "Frequency stoplist size");
  lda_topics_cmd->add_flag("--all", lp_all, "List every topic");

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "Build vocabularies from the pair corpus and LDA model");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the response model");
  std::string tr_resume;
  train_cmd->add_option("--resume", tr_resume, "Checkpoint to resume from");

  // generate
  auto* generate = app.add_subcommand("generate", "Decode a file of messages");
  std::string gn_ckpt, gn_lda, gn_input, gn_out;
  std::size_t gn_beam = 0, gn_max_len = 0;
  bool gn_greedy = false;
  generate->add_option("--ckpt", gn_ckpt, "Checkpoint")->required();
  generate->add_option("--lda", gn_lda, "LDA model file");
  generate->add_option("--input", gn_input, "Messages, one per line")->required();
  generate->add_option("--out", gn_out, "Responses file (default stdout)");
  auto* gn_beam_opt = generate->add_option("--beam", gn_beam, "Beam width");
  auto* gn_len_opt = generate->add_option("--max-len", gn_max_len, "Length cap");
  generate->add_flag("--greedy", gn_greedy, "Greedy decoding");

  // chat
  auto* chat = app.add_subcommand("chat", "Interactive decoding loop");
  std::string ch_ckpt, ch_lda, ch_transcript;
  std::size_t ch_beam = 0, ch_max_len = 0;
  chat->add_option("--ckpt", ch_ckpt, "Checkpoint")->required();
  chat->add_option("--lda", ch_lda, "LDA model file");
  auto* ch_beam_opt = chat->add_option("--beam", ch_beam, "Beam width");
  auto* ch_len_opt = chat->add_option("--max-len", ch_max_len, "Length cap");
  chat->add_option("--transcript", ch_transcript, "Session transcript file");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Perplexity, distinct-n, kappa");
  std::string ev_ckpt, ev_lda, ev_test, ev_annotations, ev_out;
  std::size_t ev_beam = 0, ev_max_len = 0;
  eval_cmd->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--lda", ev_lda, "LDA model file");
  eval_cmd->add_option("--test", ev_test, "Test pair file")->required();
  eval_cmd->add_option("--annotations", ev_annotations, "Rater label file");
  eval_cmd->add_option("--out", ev_out, "Report file");
  auto* ev_beam_opt = eval_cmd->add_option("--beam", ev_beam, "Beam width");
  auto* ev_len_opt = eval_cmd->add_option("--max-len", ev_max_len, "Length cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed_override;

    if (lda_train->parsed()) {
      if (lt_docs_opt->count() == 0) lt_docs = cfg.lda_docs;
      if (lt_docs.empty())
        throw ConfigError("lda-train: --docs (or lda_docs in config) required");
      if (lt_topics_opt->count() == 0) lt_topics = cfg.lda_topics;
      if (lt_beta_opt->count() == 0) lt_beta = cfg.lda_beta;
      if (lt_gamma_opt->count() == 0) lt_gamma = cfg.lda_gamma;
      if (lt_iters_opt->count() == 0) lt_iters = cfg.lda_iterations;
      if (lt_seed_opt->count() == 0) lt_seed = cfg.seed;
      if (lt_out_opt->count() == 0 && !config_path.empty())
        lt_out = cfg.lda_model;
      return cmd_lda_train(lt_docs, lt_topics, lt_alpha, lt_beta, lt_gamma,
                           lt_iters, lt_seed, lt_out);
    }
    if (lda_topics_cmd->parsed())
      return cmd_lda_topics(lp_model, lp_topic, lp_n, lp_stop, lp_all);
    if (prepare->parsed()) {
      if (config_path.empty()) throw ConfigError("prepare: --config required");
      return cmd_prepare(cfg);
    }
    if (train_cmd->parsed()) {
      if (config_path.empty()) throw ConfigError("train: --config required");
      return cmd_train(cfg, tr_resume);
    }
    if (generate->parsed()) {
      const std::size_t beam = gn_beam_opt->count() ? gn_beam : cfg.beam_width;
      const std::size_t len =
          gn_len_opt->count() ? gn_max_len : cfg.max_generate_len;
      return cmd_generate(gn_ckpt, gn_lda, gn_input, gn_out, beam, len,
                          gn_greedy, cfg.length_normalize);
    }
    if (chat->parsed()) {
      const std::size_t beam = ch_beam_opt->count() ? ch_beam : cfg.beam_width;
      const std::size_t len =
          ch_len_opt->count() ? ch_max_len : cfg.max_generate_len;
      return cmd_chat(ch_ckpt, ch_lda, beam, len, ch_transcript);
    }
    if (eval_cmd->parsed()) {
      const std::size_t beam = ev_beam_opt->count() ? ev_beam : cfg.beam_width;
      const std::size_t len =
          ev_len_opt->count() ? ev_max_len : cfg.max_generate_len;
      return cmd_eval(ev_ckpt, ev_lda, ev_test, ev_annotations, ev_out, beam,
                      len);
    }
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 3;
  } catch (const DimensionError& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "taseq: " << e.what() << '\n';
    return 1;
  }
}
