#pragma once
// Command implementations behind the `gile` executable. Each command takes
// parsed options and returns a process exit status; the experiment helpers
// are also usable directly from code.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gile/checkpoint.hpp"
#include "gile/config.hpp"
#include "gile/corpus.hpp"
#include "gile/embed.hpp"
#include "gile/metrics.hpp"
#include "gile/model.hpp"
#include "gile/synth.hpp"
#include "gile/training.hpp"

namespace gile {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2, kExitUnsupported = 3 };

struct CliOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scope;  // empty = eval.scope
  std::string out;    // empty = train.out (synth: data.dir)
  std::optional<std::size_t> threads;
  std::string checkpoint;  // empty = <out>/best.ckpt
  std::string input;       // predict/evaluate documents
  std::optional<std::size_t> top_n;
  std::vector<double> fractions;
  std::string sabotage;
  std::ostream* out_stream = &std::cout;
  std::ostream* err_stream = &std::cerr;
};

/// Config file plus command-line overrides.
inline ConfigTable resolve_config(const CliOptions& o) {
  ConfigTable t = o.config.empty() ? ConfigTable() : ConfigTable::load(o.config);
  if (o.seed) {
    t.set("train.seed", std::to_string(*o.seed));
    t.set("synth.seed", std::to_string(*o.seed));
  }
  if (o.threads) t.set("train.threads", std::to_string(*o.threads));
  if (!o.scope.empty()) t.set("eval.scope", o.scope);
  if (!o.out.empty()) t.set("train.out", std::filesystem::absolute(o.out).string());
  return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create directory '" + dir + "'");
  return dir;
}

// ---------------------------------------------------------------------------
// Experiment assembly.

struct DocumentOptions {
  std::size_t max_sentences = 30;
  std::size_t max_words = 30;
  bool word_level_only = false;
};

inline DocumentOptions document_options(const ConfigTable& t) {
  return {t.size("train.max_sentences"), t.size("train.max_words"), t.flag("model.word_level_only")};
}

inline std::vector<IndexedDocument> prepare_documents(const std::vector<Document>& docs, const Vocabulary& vocab,
                                                      const LabelCatalog& catalog, const DocumentOptions& o) {
  std::vector<IndexedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    Document t = truncate(d, o.max_sentences, o.max_words);
    if (o.word_level_only) t = flatten_sentences(t);
    out.push_back(index_document(t, vocab, catalog));
  }
  return out;
}

struct Experiment {
  ConfigTable table;
  ModelSpec spec;
  TrainConfig train;
  EvalProtocol protocol;
  SharingScheme scheme;
  std::vector<std::string> languages;  // empty = monolingual
  LabelCatalog catalog;
  Vocabulary vocab;
  std::vector<std::vector<std::size_t>> descriptions;
  std::vector<IndexedDocument> train_docs;
  std::vector<IndexedDocument> valid_docs;
};

/// Resolves the joint dimension once so every language view agrees.
inline ModelSpec resolve_spec(ModelSpec spec, const LabelCatalog& catalog, std::size_t languages) {
  const std::size_t k = catalog.seen_indices().size();
  const std::size_t d_h = spec.encoder.pooling == Pooling::flat_average ? spec.embed_dim : spec.encoder.sentence_dim;
  if (spec.output.kind == OutputKind::gile && spec.output.joint_dim == 0) {
    std::vector<std::size_t> ks(std::max<std::size_t>(1, languages), k);
    spec.output.joint_dim = capacity_match(d_h, spec.embed_dim, ks);
  }
  return spec;
}

inline Experiment load_experiment(const ConfigTable& t) {
  Experiment e;
  e.table = t;
  e.train = train_config(t);
  e.protocol = eval_protocol(t);
  e.scheme = sharing_scheme(t);
  e.languages = split_list(t.str("share.languages"));
  if (e.languages.size() == 1) e.languages.clear();
  if (!e.languages.empty()) e.scheme.validate();

  e.catalog = load_labels(t.path("data.labels"));
  auto train_raw = training_documents(load_documents(t.path("data.train"), e.catalog), e.catalog);
  if (train_raw.empty()) throw ConfigError("no training documents with seen labels");
  e.vocab = build_vocab(train_raw, e.catalog, t.size("data.min_count"));
  e.descriptions = index_descriptions(e.catalog, e.vocab);
  e.spec = resolve_spec(model_spec(t), e.catalog, e.languages.size());
  const auto opts = document_options(t);
  e.train_docs = prepare_documents(train_raw, e.vocab, e.catalog, opts);
  if (!t.str("data.valid").empty()) {
    e.valid_docs = prepare_documents(load_documents(t.path("data.valid"), e.catalog), e.vocab, e.catalog, opts);
  }
  return e;
}

/// One model view per language (a single unnamed view when monolingual).
inline std::vector<Model> build_models(const ModelSpec& spec, const Vocabulary& vocab, const LabelCatalog& catalog,
                                       const std::vector<std::vector<std::size_t>>& descriptions,
                                       const std::vector<std::string>& languages, const SharingScheme& scheme) {
  std::vector<Model> out;
  if (languages.empty()) {
    out.emplace_back(spec, vocab.size(), catalog, descriptions);
    return out;
  }
  for (const auto& lang : languages)
    out.emplace_back(spec, vocab.size(), catalog, descriptions, scheme.prefixes_for(lang));
  return out;
}

inline std::size_t language_index(const std::vector<std::string>& languages, const std::string& lang) {
  if (languages.empty()) return 0;
  auto it = std::find(languages.begin(), languages.end(), lang);
  if (it == languages.end()) throw ConfigError("document language '" + lang + "' is not configured");
  return static_cast<std::size_t>(it - languages.begin());
}

struct TrainOutcome {
  std::vector<Model> models;
  ParamStore store;
  TrainResult result;
};

/// Initializes and trains the configured model(s). With a non-empty
/// out_dir the log, config echo and checkpoints are written there.
inline TrainOutcome run_training(const Experiment& e, const std::string& out_dir, std::ostream& log) {
  TrainOutcome o;
  o.models = build_models(e.spec, e.vocab, e.catalog, e.descriptions, e.languages, e.scheme);
  Rng rng(e.train.seed);
  for (const auto& m : o.models) m.init(o.store, rng);
  if (const auto pre = e.table.path("data.pretrained"); !pre.empty()) {
    for (const auto& m : o.models) {
      const std::size_t n = load_pretrained(pre, e.vocab, o.store.mutable_value(m.embedding_name()));
      log << "pretrained vectors: " << n << " of " << e.vocab.size() << " rows filled\n";
    }
  }
  for (auto& m : o.models) m.prepare(o.store);

  Adam adam(e.train.adam);
  std::filesystem::path dir;
  std::ofstream train_log;
  const std::string config_text = e.table.to_ini();
  if (!out_dir.empty()) {
    dir = ensure_dir(out_dir);
    write_text(dir / "config.ini", config_text);
  }

  std::map<std::string, Rng> lang_rngs;
  auto snapshot = [&](const TrainState& st, const ParamStore& params) {
    Checkpoint c;
    c.config = config_text;
    c.vocab = e.vocab;
    c.catalog = e.catalog;
    c.params = params;
    c.adam_config = adam.config();
    c.adam_steps = adam.steps();
    c.moments = adam.moments();
    c.rng_states["train"] = rng.state();
    for (const auto& [lang, r] : lang_rngs) c.rng_states[lang] = r.state();
    c.state = st;
    return c;
  };

  TrainState start;
  std::optional<ParamStore> resume_best;
  const bool resume = !dir.empty() && e.table.flag("train.resume") && std::filesystem::exists(dir / "last.ckpt");
  if (resume) {
    if (!e.languages.empty()) throw UnsupportedError("resuming multilingual runs is not supported");
    Checkpoint c = load_checkpoint((dir / "last.ckpt").string());
    if (!(c.vocab == e.vocab) || !(c.catalog == e.catalog)) throw ConfigError("checkpoint does not match the corpus");
    o.store = std::move(c.params);
    adam.restore(c.adam_steps, std::move(c.moments));
    rng.set_state(c.rng_states.at("train"));
    start = c.state;
    for (auto& m : o.models) m.prepare(o.store);
    if (std::filesystem::exists(dir / "best.ckpt")) resume_best = load_checkpoint((dir / "best.ckpt").string()).params;
    log << "resuming at step " << start.step << ", epoch " << start.epoch << '\n';
  }

  TrainHooks hooks;
  if (!dir.empty()) {
    train_log.open(dir / "train.log", resume ? std::ios::app : std::ios::trunc);
    hooks.on_step = [&](const LogRecord& r) {
      train_log << nlohmann::json{{"step", r.step}, {"loss", r.loss}, {"wall_ms", r.wall_ms}}.dump() << '\n';
    };
    hooks.on_epoch = [&](const TrainState& st) {
      save_checkpoint((dir / "last.ckpt").string(), snapshot(st, o.store));
    };
    hooks.on_best = [&](const TrainState& st) {
      save_checkpoint((dir / "best.ckpt").string(), snapshot(st, o.store));
    };
  }
  hooks.on_eval = [&](std::size_t epoch, const MetricsReport& r) {
    log << "epoch " << epoch << ": valid AvgPr " << std::fixed << std::setprecision(2) << r.avg_precision << ", F1 "
        << r.micro_f1 << '\n';
  };

  if (e.languages.empty()) {
    o.result = train(o.models.front(), o.store, adam, rng, e.train_docs, e.valid_docs, e.catalog, e.train, e.protocol,
                     hooks, start, resume_best ? &*resume_best : nullptr);
  } else {
    std::vector<std::vector<IndexedDocument>> tr(e.languages.size()), va(e.languages.size());
    for (const auto& d : e.train_docs) tr[language_index(e.languages, d.lang)].push_back(d);
    for (const auto& d : e.valid_docs) va[language_index(e.languages, d.lang)].push_back(d);
    for (std::size_t i = 0; i < e.languages.size(); ++i)
      lang_rngs.emplace(e.languages[i], Rng(e.train.seed + 1 + i));
    std::vector<LanguageData> langs;
    for (std::size_t i = 0; i < e.languages.size(); ++i)
      langs.push_back({e.languages[i], &o.models[i], &tr[i], &va[i], &lang_rngs.at(e.languages[i])});
    o.result = train_multilingual(langs, o.store, adam, e.catalog, e.train, e.protocol, hooks);
  }
  if (!dir.empty() && !std::filesystem::exists(dir / "best.ckpt")) {
    TrainState st;
    st.step = o.result.steps;
    st.epoch = o.result.epochs;
    save_checkpoint((dir / "best.ckpt").string(), snapshot(st, o.store));
  }
  return o;
}

/// A trained model restored from a checkpoint.
struct LoadedModel {
  ConfigTable table;
  Vocabulary vocab;
  LabelCatalog catalog;
  std::vector<std::string> languages;
  std::vector<Model> models;
  ParamStore store;

  const Model& view(const std::string& lang) const { return models.at(language_index(languages, lang)); }
};

inline LoadedModel load_model(const std::string& path) {
  Checkpoint c = load_checkpoint(path);
  LoadedModel m;
  std::istringstream is(c.config);
  m.table = ConfigTable::parse(is);
  m.vocab = std::move(c.vocab);
  m.catalog = std::move(c.catalog);
  m.languages = split_list(m.table.str("share.languages"));
  if (m.languages.size() == 1) m.languages.clear();
  const auto spec = resolve_spec(model_spec(m.table), m.catalog, m.languages.size());
  m.models = build_models(spec, m.vocab, m.catalog, index_descriptions(m.catalog, m.vocab), m.languages,
                          sharing_scheme(m.table));
  m.store = std::move(c.params);
  for (auto& v : m.models) v.prepare(m.store);
  return m;
}

inline std::vector<Scope> parse_scopes(const std::string& s) {
  if (s == "seen") return {Scope::seen};
  if (s == "unseen") return {Scope::unseen};
  if (s == "both") return {Scope::seen, Scope::unseen};
  throw ConfigError("scope must be seen, unseen or both, got '" + s + "'");
}

/// Evaluates per language view; monolingual models give one report per scope.
inline MetricsReport evaluate_loaded(const LoadedModel& m, const std::vector<Document>& docs, Scope scope,
                                     const EvalProtocol& base) {
  EvalProtocol p = base;
  p.scope = scope;
  const auto opts = document_options(m.table);
  if (m.languages.empty()) return evaluate_model(m.models.front(), m.store, prepare_documents(docs, m.vocab, m.catalog, opts), m.catalog, p);
  // Pooled over languages: each document is scored by its language's view.
  const auto indexed = prepare_documents(docs, m.vocab, m.catalog, opts);
  for (const auto& v : m.models)
    if ((scope == Scope::unseen || p.mixed_candidates) && !v.supports_unseen()) {
      throw UnsupportedError("linear output layer cannot score labels unseen during training");
    }
  std::vector<std::vector<std::size_t>> gold;
  for (const auto& d : indexed) gold.push_back(d.labels);
  return evaluate_scores(
      [&](std::size_t i, std::span<const std::size_t> cand) {
        return m.view(indexed[i].lang).forward(m.store, indexed[i], cand);
      },
      gold, m.catalog, p);
}

// ---------------------------------------------------------------------------
// Commands.

inline int cmd_synth(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const auto cfg = synth_config(t);
  const auto sc = synth_generate(cfg);
  const auto dir = ensure_dir(o.out.empty() ? t.path("data.dir") : o.out);
  save_documents((dir / "train.jsonl").string(), sc.train);
  save_documents((dir / "valid.jsonl").string(), sc.valid);
  save_documents((dir / "test.jsonl").string(), sc.test);
  save_labels((dir / "labels.jsonl").string(), sc.corpus.labels);
  save_manifest((dir / "train.ids").string(), sc.train);
  save_manifest((dir / "valid.ids").string(), sc.valid);
  save_manifest((dir / "test.ids").string(), sc.test);
  write_text(dir / "synth.ini", t.to_ini());
  *o.out_stream << "synth: " << sc.corpus.labels.size() << " labels (" << sc.corpus.labels.unseen_indices().size()
                << " unseen), " << sc.train.size() << " train / " << sc.valid.size() << " valid / " << sc.test.size()
                << " test documents -> " << dir.string() << '\n';
  return kExitOk;
}

inline int cmd_train(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const Experiment e = load_experiment(t);
  const std::string dir = t.path("train.out");
  const auto out = run_training(e, dir, *o.out_stream);
  const auto& r = out.result;
  nlohmann::json summary{{"steps", r.steps},
                         {"epochs", r.epochs},
                         {"initial_loss", r.initial_loss},
                         {"final_loss", r.final_loss},
                         {"best_metric", r.best_metric},
                         {"best_epoch", r.best_epoch},
                         {"mean_step_ms", r.mean_step_ms()}};
  write_text(std::filesystem::path(dir) / "summary.json", summary.dump(2) + "\n");
  *o.out_stream << "trained " << to_string(e.spec.output.kind) << ": " << r.steps << " steps, " << r.epochs
                << " epochs, loss " << std::setprecision(6) << r.initial_loss << " -> " << r.final_loss
                << ", best epoch " << r.best_epoch << " -> " << dir << "/best.ckpt\n";
  return kExitOk;
}

inline std::string checkpoint_path(const CliOptions& o, const ConfigTable& t) {
  return o.checkpoint.empty() ? (std::filesystem::path(t.path("train.out")) / "best.ckpt").string() : o.checkpoint;
}

inline int cmd_evaluate(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const LoadedModel m = load_model(checkpoint_path(o, t));
  const std::string docs_path = o.input.empty() ? t.path("data.test") : o.input;
  const auto docs = load_documents(docs_path, m.catalog);
  const auto scopes = parse_scopes(t.str("eval.scope"));
  EvalProtocol base = eval_protocol(t);
  base.max_sentences = m.table.size("train.max_sentences");
  base.max_words = m.table.size("train.max_words");

  std::vector<MetricsReport> reports;
  bool refused = false;
  for (auto s : scopes) {
    try {
      reports.push_back(evaluate_loaded(m, docs, s, base));
    } catch (const UnsupportedError& ex) {
      if (scopes.size() == 1) throw;
      *o.err_stream << "evaluate: " << to_string(s) << " scope skipped: " << ex.what() << '\n';
      refused = true;
    }
  }
  const auto dir = ensure_dir(t.path("train.out"));
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) {
    write_text(dir / ("metrics_" + to_string(r.scope) + ".json"), to_json(r).dump(2) + "\n");
    arr.push_back(to_json(r, false));
  }
  *o.out_stream << arr.dump() << '\n' << format_table(reports);
  if (refused) *o.out_stream << "unseen scope: unsupported by this output layer\n";
  return kExitOk;
}

inline int cmd_predict(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const LoadedModel m = load_model(checkpoint_path(o, t));
  std::string docs_path = o.input;
  if (docs_path.empty()) docs_path = t.str("predict.input").empty() ? t.path("data.test") : t.path("predict.input");
  const auto docs = load_documents(docs_path, m.catalog);
  std::size_t top_n = o.top_n ? *o.top_n : t.size("predict.top_n");
  const bool all = std::all_of(m.models.begin(), m.models.end(), [](const Model& v) { return v.supports_unseen(); });
  std::vector<std::size_t> candidates = m.catalog.seen_indices();
  if (all) {
    candidates.resize(m.catalog.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  }
  if (top_n > candidates.size()) {
    *o.err_stream << "predict: top_n " << top_n << " exceeds " << candidates.size() << " candidate labels; clamped\n";
    top_n = candidates.size();
  }
  const auto indexed = prepare_documents(docs, m.vocab, m.catalog, document_options(m.table));
  const auto dir = ensure_dir(t.path("train.out"));
  std::ofstream out(dir / "predictions.jsonl", std::ios::binary);
  if (!out) throw Error("cannot write predictions");
  for (std::size_t i = 0; i < indexed.size(); ++i) {
    const Vec s = m.view(indexed[i].lang).forward(m.store, indexed[i], candidates);
    const auto order = rank_order(s);
    auto labels = nlohmann::json::array();
    for (std::size_t r = 0; r < top_n; ++r)
      labels.push_back({{"id", m.catalog[candidates[order[r]]].id}, {"prob", sigmoid(s[order[r]])}});
    out << nlohmann::json{{"id", docs[i].id}, {"labels", labels}}.dump() << '\n';
  }
  *o.out_stream << "predict: " << indexed.size() << " documents -> " << (dir / "predictions.jsonl").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Gradient check over every output kind and cell kind.

struct GradCheckCase {
  std::string output;
  std::string encoder;
  std::string activation;
  GradCheckReport report;
};

/// Tiny synthetic problem shared by every checked combination.
struct GradCheckProblem {
  LabelCatalog catalog;
  Vocabulary vocab;
  std::vector<std::vector<std::size_t>> descriptions;
  std::vector<IndexedDocument> docs;
};

inline GradCheckProblem gradcheck_problem(std::size_t labels, std::size_t documents, std::uint64_t seed) {
  SynthConfig sc;
  sc.topics = 4;
  sc.words_per_topic = 3;
  sc.description_words_per_topic = 1;
  sc.topics_per_label = 2;
  sc.labels = std::min<std::size_t>(labels, 6);
  sc.docs_per_label = 1;
  sc.min_sentences = 2;
  sc.max_sentences = 3;
  sc.min_words = 2;
  sc.max_words = 4;
  sc.noise_words = 5;
  sc.unseen_fraction = 0.0;
  sc.valid_fraction = 0.0;
  sc.test_fraction = 0.0;
  sc.seed = seed;
  const auto corpus = synth_generate(sc);
  GradCheckProblem p;
  p.catalog = corpus.corpus.labels;
  p.vocab = build_vocab(corpus.train, p.catalog, 1);
  p.descriptions = index_descriptions(p.catalog, p.vocab);
  for (std::size_t i = 0; i < std::min(documents, corpus.train.size()); ++i)
    p.docs.push_back(index_document(corpus.train[i], p.vocab, p.catalog));
  return p;
}

struct GradCheckVariant {
  std::string name;
  OutputLayerSpec output;
};

inline std::vector<GradCheckVariant> gradcheck_variants(Activation act) {
  std::vector<GradCheckVariant> v;
  auto add = [&](std::string name, OutputKind k, BilinearVariant b = BilinearVariant::plain, bool tied = false) {
    OutputLayerSpec s;
    s.kind = k;
    s.activation = act;
    s.bilinear_variant = b;
    s.tied_embeddings = tied;
    v.push_back({std::move(name), s});
  };
  add("linear", OutputKind::linear);
  add("linear-tied", OutputKind::linear, BilinearVariant::plain, true);
  add("bilinear", OutputKind::bilinear);
  add("bilinear-label-nonlin", OutputKind::bilinear, BilinearVariant::label_nonlin);
  add("bilinear-input-nonlin", OutputKind::bilinear, BilinearVariant::input_nonlin);
  add("gile", OutputKind::gile);
  add("gile-label-only", OutputKind::gile_label_only);
  add("gile-input-only", OutputKind::gile_input_only);
  add("gile-constrained", OutputKind::gile_constrained);
  return v;
}

/// Runs the check for every output variant x {dense, gru} x activation at `dim`.
inline std::vector<GradCheckCase> run_gradcheck(std::size_t dim, std::size_t labels, std::size_t documents,
                                                double tolerance, double eps, std::uint64_t seed,
                                                const std::vector<Activation>& activations = {Activation::relu,
                                                                                             Activation::tanh},
                                                const std::string& sabotage = "") {
  if (dim == 0 || dim > 8) throw ConfigError("gradcheck.dim must be in [1, 8]");
  const auto prob = gradcheck_problem(labels, documents, seed);
  std::vector<const IndexedDocument*> docs;
  for (const auto& d : prob.docs) docs.push_back(&d);
  std::vector<GradCheckCase> out;
  for (const auto act : activations)
  for (const auto cell : {CellKind::dense, CellKind::gru}) {
    for (const auto& variant : gradcheck_variants(act)) {
      ModelSpec spec;
      spec.embed_dim = dim;
      spec.encoder.kind = cell;
      spec.encoder.pooling = Pooling::attention;
      spec.encoder.word_dim = dim;
      spec.encoder.sentence_dim = dim;
      spec.encoder.dense_activation = Activation::tanh;
      spec.output = variant.output;
      if (spec.output.kind == OutputKind::gile) spec.output.joint_dim = dim;
      Model model(spec, prob.vocab.size(), prob.catalog, prob.descriptions);
      ParamStore store;
      Rng rng(seed);
      model.init(store, rng);
      model.prepare(store);
      std::vector<std::vector<std::size_t>> cand(docs.size(), model.seen_labels());
      const std::string sab = store.has(sabotage) ? sabotage : "";
      out.push_back(
          {variant.name, to_string(cell), to_string(act), grad_check(model, store, docs, cand, tolerance, eps, sab)});
    }
  }
  return out;
}

inline int cmd_gradcheck(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const double tol = t.real("gradcheck.tolerance");
  const std::string sabotage = o.sabotage.empty() ? t.str("gradcheck.sabotage") : o.sabotage;
  std::vector<Activation> acts;
  for (const auto& a : split_list(t.str("gradcheck.activations"))) acts.push_back(parse_activation(a));
  if (acts.empty()) throw ConfigError("gradcheck.activations is empty");
  const auto cases = run_gradcheck(t.size("gradcheck.dim"), t.size("gradcheck.labels"), t.size("gradcheck.documents"),
                                   tol, t.real("gradcheck.eps"), t.u64("train.seed"), acts, sabotage);
  auto& os = *o.out_stream;
  os << std::left << std::setw(24) << "output" << std::setw(8) << "encoder" << std::setw(9) << "act" << std::setw(20)
     << "worst entry" << std::right << std::setw(11) << "rel error" << std::setw(7) << "kinks" << "  result\n";
  bool ok = true;
  auto js = nlohmann::json::array();
  for (const auto& c : cases) {
    const auto& w = c.report.worst();
    os << std::left << std::setw(24) << c.output << std::setw(8) << c.encoder << std::setw(9) << c.activation
       << std::setw(20) << w.name << std::right << std::setw(11) << std::scientific << std::setprecision(2)
       << w.rel_error << std::defaultfloat << std::setw(7) << c.report.kink_skipped() << "  "
       << (c.report.passed() ? "pass" : "FAIL") << '\n';
    for (const auto& f : c.report.failures()) os << "    failed: " << f << '\n';
    ok = ok && c.report.passed();
    auto entries = nlohmann::json::array();
    for (const auto& e : c.report.entries)
      entries.push_back({{"name", e.name},
                         {"rel_error", e.rel_error},
                         {"checked", e.checked},
                         {"kink_skipped", e.kink_skipped},
                         {"pass", e.pass}});
    js.push_back({{"output", c.output},
                  {"encoder", c.encoder},
                  {"activation", c.activation},
                  {"passed", c.report.passed()},
                  {"entries", entries}});
  }
  if (!o.out.empty()) write_text(ensure_dir(o.out) / "gradcheck.json", js.dump(2) + "\n");
  os << (ok ? "gradcheck: all passed" : "gradcheck: FAILED") << " (tolerance " << tol << ")\n";
  return ok ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// Negative-sampling sweep.

struct SweepRow {
  double fraction = 0.0;
  double micro_f1 = 0.0;
  double avg_precision = 0.0;
  double mean_step_ms = 0.0;
  double train_ms = 0.0;
  std::uint64_t steps = 0;
};

/// Trains one model per fraction from the same seed and scores the seen
/// scope of data.test.
inline std::vector<SweepRow> sample_sweep(const ConfigTable& base, const std::vector<double>& fractions,
                                          std::ostream& log) {
  if (fractions.empty()) throw ConfigError("sample-sweep needs at least one fraction");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sample-sweep fractions must be in (0,1]");
  const Experiment e0 = load_experiment(base);
  const auto test_docs = prepare_documents(load_documents(base.path("data.test"), e0.catalog), e0.vocab, e0.catalog,
                                           document_options(base));
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    Experiment e = e0;
    e.train.negative_fraction = f;
    std::ostringstream fs;
    fs << f;
    e.table.set("train.negative_fraction", fs.str());
    const auto out = run_training(e, "", log);
    EvalProtocol p = e.protocol;
    p.scope = Scope::seen;
    const auto rep = evaluate_model(out.models.front(), out.store, test_docs, e.catalog, p);
    rows.push_back({f, rep.micro_f1, rep.avg_precision, out.result.mean_step_ms(), out.result.step_ms_total,
                    out.result.steps});
    log << "fraction " << f << ": F1 " << rep.micro_f1 << ", " << out.result.mean_step_ms() << " ms/step\n";
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "fraction,micro_f1,avg_precision,mean_step_ms,train_ms,steps\n";
  for (const auto& r : rows)
    os << r.fraction << ',' << r.micro_f1 << ',' << r.avg_precision << ',' << r.mean_step_ms << ',' << r.train_ms
       << ',' << r.steps << '\n';
  return os.str();
}

inline int cmd_sample_sweep(const CliOptions& o) {
  const ConfigTable t = resolve_config(o);
  const auto fractions = o.fractions.empty() ? sweep_fractions(t) : o.fractions;
  if (fractions.empty()) throw ConfigError("sample-sweep: empty fraction list");
  if (!t.str("share.languages").empty() && split_list(t.str("share.languages")).size() > 1) {
    throw UnsupportedError("sample-sweep runs monolingual models only");
  }
  std::ostringstream quiet;
  const auto rows = sample_sweep(t, fractions, quiet);
  const auto dir = ensure_dir(t.path("train.out"));
  write_text(dir / "sweep.csv", sweep_csv(rows));
  auto& os = *o.out_stream;
  os << std::right << std::setw(10) << "fraction" << std::setw(10) << "F1" << std::setw(10) << "AvgPr" << std::setw(12)
     << "ms/step" << '\n';
  os << std::fixed;
  for (const auto& r : rows)
    os << std::setw(10) << std::setprecision(3) << r.fraction << std::setw(10) << std::setprecision(2) << r.micro_f1
       << std::setw(10) << r.avg_precision << std::setw(12) << std::setprecision(3) << r.mean_step_ms << '\n';
  os << "csv: " << (dir / "sweep.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run_command(const std::string& cmd, const CliOptions& o) {
  try {
    if (cmd == "synth") return cmd_synth(o);
    if (cmd == "train") return cmd_train(o);
    if (cmd == "evaluate") return cmd_evaluate(o);
    if (cmd == "predict") return cmd_predict(o);
    if (cmd == "gradcheck") return cmd_gradcheck(o);
    if (cmd == "sample-sweep") return cmd_sample_sweep(o);
    *o.err_stream << "unknown command '" << cmd << "'\n";
    return kExitUsage;
  } catch (const UnsupportedError& e) {
    *o.err_stream << cmd << ": unsupported: " << e.what() << '\n';
    return kExitUnsupported;
  } catch (const ConfigError& e) {
    *o.err_stream << cmd << ": configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    *o.err_stream << cmd << ": error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

/// Parses argv and runs the selected subcommand.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multi-label text classification with joint input-label embeddings"};
  app.require_subcommand(1);
  CliOptions o;
  o.out_stream = &out;
  o.err_stream = &err;
  std::uint64_t seed = 0;
  std::size_t threads = 0, top_n = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override train.seed and synth.seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", threads, "worker threads (opt-in, not bit-reproducible)")->check(CLI::PositiveNumber);
  };
  std::vector<CLI::App*> subs;
  for (const char* name : {"synth", "train", "evaluate", "predict", "gradcheck", "sample-sweep"}) {
    auto* s = app.add_subcommand(name);
    common(s);
    subs.push_back(s);
  }
  subs[2]->add_option("--scope", o.scope, "seen | unseen | both")->check(CLI::IsMember({"seen", "unseen", "both"}));
  for (auto* s : {subs[2], subs[3]}) {
    s->add_option("--checkpoint", o.checkpoint, "checkpoint file (default <out>/best.ckpt)");
    s->add_option("--input", o.input, "documents JSONL");
  }
  subs[3]->add_option("--top-n", top_n, "labels per document");
  subs[4]->add_option("--sabotage", o.sabotage, "negate one entry's analytic gradient (negative control)");
  subs[5]->add_option("--fractions", o.fractions, "negative fractions, e.g. 0.1,0.5,1.0")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  for (auto* s : subs) {
    if (!s->parsed()) continue;
    if (s->count("--seed")) o.seed = seed;
    if (s->count("--threads")) o.threads = threads;
    if (s->get_name() == "predict" && s->count("--top-n")) o.top_n = top_n;
    if (s->get_name() == "sample-sweep" && s->count("--fractions") && o.fractions.empty()) {
      err << "sample-sweep: empty fraction list\n";
      return kExitUsage;
    }
    return run_command(s->get_name(), o);
  }
  return kExitUsage;
}

}  // namespace gile
