// Acceptance checks, one per criterion. Usage: acceptance <1..10>, or no
// argument to run all of them. Each check prints one PASS/FAIL line and the
// process exits nonzero when any selected check fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "../unit/support.hpp"

namespace gile::acceptance {
namespace {

using clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

std::string fmt(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string join(const std::vector<double>& v, int precision = 2) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], precision);
  return s;
}

int run_cli(const std::string& cmd, CliOptions o) {
  static std::ostringstream sink;
  o.out_stream = &sink;
  o.err_stream = &sink;
  return run_command(cmd, o);
}

// ---------------------------------------------------------------------------

Verdict gradient_fidelity() {
  const auto t0 = clock::now();
  const auto cases = run_gradcheck(6, 6, 2, 1e-4, 1e-3, 1, {Activation::relu, Activation::tanh});
  double worst = 0.0;
  std::size_t failed = 0, kinks = 0;
  for (const auto& c : cases) {
    worst = std::max(worst, c.report.worst().rel_error);
    failed += !c.report.passed();
    kinks += c.report.kink_skipped();
  }
  // Negative control: a negated gradient entry must be caught.
  const auto sabotaged = run_gradcheck(6, 6, 2, 1e-4, 1e-3, 1, {Activation::tanh}, "joint.V");
  const bool control = std::any_of(sabotaged.begin(), sabotaged.end(), [](const auto& c) { return !c.report.passed(); });
  const double secs = seconds_since(t0);
  return {failed == 0 && control && secs < 120.0,
          std::to_string(cases.size()) + " combinations, " + std::to_string(failed) + " failed, worst rel error " +
              fmt(worst * 1e6, 3) + "e-6, " + std::to_string(kinks) + " kink probes excluded, sabotage " +
              (control ? "caught" : "MISSED") + ", " + fmt(secs, 1) + " s"};
}

Verdict degenerate_equivalence() {
  Rng rng(2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 1 + rng.index(12), d = 1 + rng.index(10), d_h = 1 + rng.index(10);
    const Mat labels = test::random_mat(k, d, rng);
    const Mat V = test::random_mat(d, d_h, rng);
    const Vec h = test::random_vec(d_h, rng);
    // Independent oracle: E V h with plain loops.
    Vec expect(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t a = 0; a < d; ++a) {
        double vh = 0.0;
        for (std::size_t c = 0; c < d_h; ++c) vh += V(a, c) * h[c];
        expect[j] += labels(j, a) * vh;
      }
    const auto [gile, bilinear] = degenerate_check(labels, V, h);
    worst = std::max({worst, test::max_abs_diff(gile, bilinear), test::max_abs_diff(gile, expect)});
  }
  return {worst <= 1e-12, "100 instances, max |GILE - EVh| = " + fmt(worst * 1e15, 3) + "e-15"};
}

Verdict label_set_independence() {
  OutputLayerSpec gile_spec;
  gile_spec.joint_dim = 64;
  OutputLayerSpec linear_spec;
  linear_spec.kind = OutputKind::linear;
  const std::size_t d = 100, d_h = 100;
  std::vector<std::size_t> gile_counts;
  bool linear_ok = true;
  std::string linear_detail;
  for (std::size_t k : {10u, 100u, 10000u}) {
    gile_counts.push_back(param_count(gile_spec, OutputDims{.d = d, .d_h = d_h, .d_j = 64, .k = k}));
    const auto lc = param_count(linear_spec, OutputDims{.d = d, .d_h = d_h, .k = k});
    linear_ok = linear_ok && lc == k * (d_h + 1);
    linear_detail += (linear_detail.empty() ? "" : ",") + std::to_string(lc);
  }
  const bool gile_ok = gile_counts[0] == gile_counts[1] && gile_counts[1] == gile_counts[2];

  // Instantiated layers agree with the formula.
  std::vector<std::size_t> stored;
  for (std::size_t k : {10u, 100u}) {
    OutputLayer layer(gile_spec, d, d_h, k, GroupPrefixes{});
    ParamStore s;
    Rng rng(1);
    layer.init(s, rng);
    stored.push_back(s.scalar_count());
  }
  const bool stored_ok = stored[0] == gile_counts[0] && stored[1] == gile_counts[0];
  return {gile_ok && linear_ok && stored_ok, "gile " + std::to_string(gile_counts[0]) + " for k in {10,100,10000} (stored " +
                                                 std::to_string(stored[0]) + "); linear " + linear_detail};
}

Verdict sampling_consistency() {
  const auto prob = [] {
    SynthConfig sc;
    sc.topics = 12;
    sc.words_per_topic = 5;
    sc.labels = 50;
    sc.docs_per_label = 1;
    sc.max_sentences = 3;
    sc.noise_words = 20;
    sc.unseen_fraction = 0.0;
    sc.valid_fraction = 0.0;
    sc.test_fraction = 0.0;
    sc.seed = 4;
    return synth_generate(sc);
  }();
  const LabelCatalog& catalog = prob.corpus.labels;
  const Vocabulary vocab = build_vocab(prob.train, catalog, 1);
  std::vector<IndexedDocument> docs;
  for (std::size_t i = 0; i < 8; ++i) docs.push_back(index_document(prob.train[i], vocab, catalog));
  std::vector<const IndexedDocument*> batch;
  for (const auto& d : docs) batch.push_back(&d);

  ModelSpec spec;
  spec.embed_dim = 8;
  spec.encoder.word_dim = 8;
  spec.encoder.sentence_dim = 8;
  spec.output.joint_dim = 8;
  Model model(spec, vocab.size(), catalog, index_descriptions(catalog, vocab));
  ParamStore store;
  Rng rng(5);
  model.init(store, rng);
  model.prepare(store);

  // A few real updates first so label scores are spread out.
  Adam warm(AdamConfig{0.05});
  for (int i = 0; i < 40; ++i) step_monolingual(batch, model, store, warm, rng);

  const double full = full_loss(model, store, docs);
  Adam adam(AdamConfig{0.0});
  const double sampled = step_monolingual(batch, model, store, adam, rng, {1.0, 1});
  const bool exact = sampled == full;

  // Rescaled negative term: (n / m) times the sum over m sampled negatives,
  // averaged over resamples, against the full negative sum.
  const auto& pool = model.seen_labels();
  double full_neg = 0.0, est = 0.0, lo = 1e300, hi = 0.0;
  const int resamples = 10000;
  const double fraction = 0.2;
  for (const auto& d : docs) {
    const Vec scores = model.forward(store, d, pool);
    std::vector<double> neg_term(catalog.size(), 0.0);
    std::size_t n_neg = 0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (std::binary_search(d.labels.begin(), d.labels.end(), pool[j])) continue;
      neg_term[pool[j]] = bce_term(0.0, sigmoid(scores[j]));
      full_neg += neg_term[pool[j]];
      lo = std::min(lo, neg_term[pool[j]]);
      hi = std::max(hi, neg_term[pool[j]]);
      ++n_neg;
    }
    double acc = 0.0;
    for (int r = 0; r < resamples; ++r) {
      const auto negs = sample_negatives(d.labels, pool, fraction, rng);
      double s = 0.0;
      for (auto l : negs) s += neg_term[l];
      acc += s * static_cast<double>(n_neg) / static_cast<double>(negs.size());
    }
    est += acc / resamples;
  }
  const double rel = std::abs(est - full_neg) / full_neg;
  return {exact && rel <= 0.02, "fraction 1.0 loss " + (exact ? std::string("== full loss (bit-exact)") : "DIFFERS") +
                                    "; rescaled negative term rel error " + fmt(100.0 * rel, 3) + "% over " +
                                    std::to_string(resamples) + " resamples, 50 labels, per-label terms in [" + fmt(lo, 4) +
                                    ", " + fmt(hi, 4) + "]"};
}

// ---------------------------------------------------------------------------
// Synthetic zero-shot corpus shared by criteria 5 and 6.

std::string zero_shot_ini(std::uint64_t seed) {
  return "[data]\ndir = data\n"
         "[model]\nembed_dim = 16\nword_dim = 16\nsentence_dim = 16\nencoder = dense\ndense_activation = tanh\n"
         "embed_init_scale = 1.0\n"
         "[train]\nbatch_size = 32\nmax_epochs = 30\nlr = 0.01\npatience = 5\nseed = " +
         std::to_string(seed) +
         "\n"
         "[synth]\ntopics = 12\nwords_per_topic = 20\nlabels = 40\ndocs_per_label = 200\nunseen_fraction = 0.25\n"
         "seed = " +
         std::to_string(seed) + "\n";
}

struct ZeroShotSeed {
  test::ScratchDir dir{"zeroshot"};
  ConfigTable table;
  std::vector<IndexedDocument> test_docs;
  LabelCatalog catalog;
  std::size_t train_docs = 0;

  explicit ZeroShotSeed(std::uint64_t seed) {
    test::write_file(dir.file("zs.ini"), zero_shot_ini(seed));
    CliOptions o;
    o.config = dir.file("zs.ini");
    if (run_cli("synth", o) != kExitOk) throw Error("synth failed");
    table = ConfigTable::load(dir.file("zs.ini"));
  }

  struct Run {
    MetricsReport seen, unseen;
    bool unseen_unsupported = false;
  };

  Run train(const std::string& kind) {
    ConfigTable t = table;
    t.set("output.kind", kind);
    if (kind == "gile") t.set("output.joint_dim", "64");
    const Experiment e = load_experiment(t);
    std::ostringstream log;
    const auto out = run_training(e, "", log);
    train_docs = e.train_docs.size();
    catalog = e.catalog;
    test_docs = prepare_documents(load_documents(t.path("data.test"), e.catalog), e.vocab, e.catalog,
                                  document_options(t));
    Run r;
    EvalProtocol p = e.protocol;
    p.scope = Scope::seen;
    r.seen = evaluate_model(out.models.front(), out.store, test_docs, e.catalog, p);
    p.scope = Scope::unseen;
    try {
      r.unseen = evaluate_model(out.models.front(), out.store, test_docs, e.catalog, p);
    } catch (const UnsupportedError&) {
      r.unseen_unsupported = true;
    }
    return r;
  }

  /// Expected unseen AvgPr of uniformly random scores, averaged over draws.
  double random_baseline() const {
    std::vector<std::vector<std::size_t>> gold;
    for (const auto& d : test_docs) gold.push_back(d.labels);
    Rng rng(99);
    EvalProtocol p;
    p.scope = Scope::unseen;
    double sum = 0.0;
    const int draws = 20;
    for (int i = 0; i < draws; ++i)
      sum += evaluate_scores([&](std::size_t, std::span<const std::size_t> c) { return test::random_vec(c.size(), rng); },
                             gold, catalog, p)
                 .avg_precision;
    return sum / draws;
  }
};

Verdict zero_shot() {
  const auto t0 = clock::now();
  std::vector<double> gile_unseen, baseline, gile_f1, linear_f1;
  bool unsupported = true;
  std::size_t train_docs = 0, seen_labels = 0, unseen_labels = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ZeroShotSeed z(seed);
    const auto g = z.train("gile");
    const auto l = z.train("linear");
    gile_unseen.push_back(g.unseen.avg_precision);
    gile_f1.push_back(g.seen.micro_f1);
    linear_f1.push_back(l.seen.micro_f1);
    baseline.push_back(z.random_baseline());
    unsupported = unsupported && l.unseen_unsupported && !g.unseen_unsupported;
    train_docs = z.train_docs;
    seen_labels = z.catalog.seen_indices().size();
    unseen_labels = z.catalog.unseen_indices().size();
  }
  const double secs = seconds_since(t0);
  const double gu = median3(gile_unseen), rb = median3(baseline), gf = median3(gile_f1), lf = median3(linear_f1);
  const bool a = gu >= rb + 20.0, c = gf >= lf - 2.0;
  return {a && unsupported && c && secs < 900.0,
          std::to_string(seen_labels) + "+" + std::to_string(unseen_labels) + " labels, " +
              std::to_string(train_docs) + " train docs; (a) GILE unseen AvgPr " + fmt(gu) + " [" + join(gile_unseen) +
              "] vs random " + fmt(rb) + (a ? " ok" : " FAIL") + "; (b) linear unseen " +
              (unsupported ? "unsupported ok" : "FAIL") + "; (c) seen F1 GILE " + fmt(gf) + " vs linear " + fmt(lf) +
              (c ? " ok" : " FAIL") + "; d_j 64; " + fmt(secs, 0) + " s"};
}

Verdict ablation_ordering() {
  std::vector<double> label_only, input_only;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ZeroShotSeed z(seed);
    label_only.push_back(z.train("gile-label-only").unseen.avg_precision);
    input_only.push_back(z.train("gile-input-only").unseen.avg_precision);
  }
  const double lo = median3(label_only), io = median3(input_only);
  return {lo >= io, "d_j = 16; unseen AvgPr label-only " + fmt(lo) + " [" + join(label_only) + "] vs input-only " +
                        fmt(io) + " [" + join(input_only) + "]"};
}

// ---------------------------------------------------------------------------

Verdict sampling_tradeoff() {
  const auto t0 = clock::now();
  test::ScratchDir dir("sweep");
  test::write_file(dir.file("sweep.ini"),
                   "[data]\ndir = data\n"
                   "[model]\nembed_dim = 16\nword_dim = 16\nsentence_dim = 16\nencoder = dense\n"
                   "dense_activation = tanh\nembed_init_scale = 1.0\n"
                   "[train]\nbatch_size = 32\nmax_epochs = 20\nlr = 0.01\npatience = 5\nout = run\n"
                   "[synth]\ntopics = 30\nwords_per_topic = 10\nlabels = 300\ndocs_per_label = 20\nunseen_fraction = 0\n"
                   "[sweep]\nfractions = 0.1,0.25,0.5,1.0\n");
  CliOptions o;
  o.config = dir.file("sweep.ini");
  if (run_cli("synth", o) != kExitOk) return {false, "synth failed"};
  if (run_cli("sample-sweep", o) != kExitOk) return {false, "sample-sweep failed"};
  std::istringstream csv(test::read_file(dir.file("run/sweep.csv")));
  std::string line;
  std::getline(csv, line);
  std::vector<double> fractions, f1, ms;
  while (std::getline(csv, line)) {
    const auto cols = split_list(line);
    fractions.push_back(std::stod(cols.at(0)));
    f1.push_back(std::stod(cols.at(1)));
    ms.push_back(std::stod(cols.at(3)));
  }
  if (fractions.size() != 4) return {false, "expected 4 sweep rows"};
  bool increasing = true;
  for (std::size_t i = 1; i < ms.size(); ++i) increasing = increasing && ms[i] > ms[i - 1];
  const double best = *std::max_element(f1.begin(), f1.end());
  const bool close = f1.back() >= best - 3.0;
  const double secs = seconds_since(t0);
  return {increasing && close && secs < 1800.0, "ms/step [" + join(ms, 3) + "]" + (increasing ? " increasing" : " NOT increasing") +
                                                    "; F1 [" + join(f1) + "], at 1.0 " + fmt(f1.back()) + " vs best " +
                                                    fmt(best) + "; " + fmt(secs, 0) + " s"};
}

// ---------------------------------------------------------------------------

struct MultilingualSetup {
  test::ScratchDir dir{"multi"};
  Experiment e;
  std::vector<std::vector<IndexedDocument>> train;  // per language

  explicit MultilingualSetup(const std::string& scheme_lines) {
    test::write_file(dir.file("m.ini"),
                     "[data]\ndir = data\nvalid =\n"
                     "[model]\nembed_dim = 8\nword_dim = 8\nsentence_dim = 8\nencoder = gru\n"
                     "[output]\njoint_dim = 8\n"
                     "[train]\nbatch_size = 8\nepoch_size = 64\nmax_epochs = 3\nlr = 0.01\nnegative_fraction = 0.5\n"
                     "[share]\nlanguages = en,de\n" +
                         scheme_lines +
                         "[synth]\ntopics = 6\nwords_per_topic = 6\nlabels = 8\ndocs_per_label = 20\n"
                         "unseen_fraction = 0\nlanguages = en,de\n");
    CliOptions o;
    o.config = dir.file("m.ini");
    if (run_cli("synth", o) != kExitOk) throw Error("synth failed");
    e = load_experiment(ConfigTable::load(dir.file("m.ini")));
    train.resize(e.languages.size());
    for (const auto& d : e.train_docs) train[language_index(e.languages, d.lang)].push_back(d);
  }

  std::vector<Model> views() const {
    return build_models(e.spec, e.vocab, e.catalog, e.descriptions, e.languages, e.scheme);
  }
};

Verdict multilingual_sharing() {
  // Part 1: default scheme, joint space shared and classifier per language.
  MultilingualSetup ms("");
  auto views = ms.views();
  ParamStore store;
  Rng init(1);
  for (const auto& v : views) v.init(store, init);
  for (auto& v : views) v.prepare(store);
  const std::vector<std::string> shared_names{"joint.U", "joint.bu", "joint.V", "joint.bv"};
  auto view_entry = [&](const Model& v, const std::string& suffix) {
    for (const auto& n : v.param_names())
      if (n == suffix || n.ends_with("/" + suffix)) return n;
    throw Error("view has no " + suffix);
  };
  std::vector<Mat> shared_before;
  for (const auto& n : shared_names) shared_before.push_back(store.value(n));
  bool shared_identical = true;
  std::size_t steps = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const LogRecord&) {
    ++steps;
    for (const auto& n : shared_names) {
      const Mat& a = store.value(view_entry(views[0], n));
      const Mat& b = store.value(view_entry(views[1], n));
      shared_identical = shared_identical && a == b && &a == &b;
    }
  };
  std::vector<Rng> rngs{Rng(2), Rng(3)};
  std::vector<LanguageData> langs;
  const std::vector<IndexedDocument> no_valid;
  for (std::size_t i = 0; i < views.size(); ++i)
    langs.push_back({ms.e.languages[i], &views[i], &ms.train[i], &no_valid, &rngs[i]});
  Adam adam(ms.e.train.adam);
  train_multilingual(langs, store, adam, ms.e.catalog, ms.e.train, ms.e.protocol, hooks);
  bool shared_moved = true;
  for (std::size_t i = 0; i < shared_names.size(); ++i)
    shared_moved = shared_moved && !(store.value(shared_names[i]) == shared_before[i]);
  const bool w_diverged = !(store.value("en/cls.w") == store.value("de/cls.w")) &&
                          !(store.value("en/cls.b") == store.value("de/cls.b"));
  const bool part1 = shared_identical && shared_moved && w_diverged && steps > 0;

  // Part 2: every group per language against two independent monolingual runs.
  MultilingualSetup pl(
      "embeddings = per-language\nword_encoder = per-language\nword_attention = per-language\n"
      "sentence_encoder = per-language\nsentence_attention = per-language\njoint = per-language\n"
      "classifier = per-language\n");
  auto pviews = pl.views();
  ParamStore joint;
  Rng pinit(7);
  for (const auto& v : pviews) v.init(joint, pinit);
  for (auto& v : pviews) v.prepare(joint);
  Model mono(pl.e.spec, pl.e.vocab.size(), pl.e.catalog, pl.e.descriptions);
  std::vector<ParamStore> mono_stores(2);
  for (std::size_t l = 0; l < 2; ++l) {
    const std::string prefix = pl.e.languages[l] + "/";
    for (const auto& [name, entry] : joint.entries())
      if (name.starts_with(prefix)) mono_stores[l].add(name.substr(prefix.size()), entry.value, entry.trainable);
  }
  std::vector<Rng> jr{Rng(11), Rng(12)};
  std::vector<LanguageData> plangs;
  for (std::size_t i = 0; i < pviews.size(); ++i)
    plangs.push_back({pl.e.languages[i], &pviews[i], &pl.train[i], &no_valid, &jr[i]});
  Adam jadam(pl.e.train.adam);
  train_multilingual(plangs, joint, jadam, pl.e.catalog, pl.e.train, pl.e.protocol);
  bool bit_exact = true;
  std::size_t compared = 0;
  for (std::size_t l = 0; l < 2; ++l) {
    Rng mr(11 + l);
    Adam madam(pl.e.train.adam);
    mono.prepare(mono_stores[l]);
    train(mono, mono_stores[l], madam, mr, pl.train[l], no_valid, pl.e.catalog, pl.e.train, pl.e.protocol);
    for (const auto& [name, entry] : mono_stores[l].entries()) {
      const Mat& j = joint.value(pl.e.languages[l] + "/" + name);
      bit_exact = bit_exact && entry.value.size() == j.size() &&
                  std::memcmp(entry.value.data().data(), j.data().data(), j.size() * sizeof(double)) == 0;
      ++compared;
    }
  }
  return {part1 && bit_exact, "shared U,b_u,V,b_v identical across views at all " + std::to_string(steps) + " steps" +
                                  (shared_identical && shared_moved ? "" : " FAIL") + ", w,b " +
                                  (w_diverged ? "diverged" : "DID NOT diverge") + "; all-per-language vs monolingual: " +
                                  std::to_string(compared) + " tensors " + (bit_exact ? "bit-exact" : "DIFFER")};
}

// ---------------------------------------------------------------------------

Verdict metric_suite() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  check(*rank_loss(Vec{0.9, 0.1, 0.5}, Gold{1, 0, 0}) == 0.0, "RL ordered");
  check(*rank_loss(Vec{0.1, 0.9, 0.5}, Gold{1, 0, 0}) == 1.0, "RL reversed");
  check(*rank_loss(Vec{0.5, 0.5, 0.1}, Gold{1, 0, 0}) == 0.25, "RL tie");
  check(*avg_precision(Vec{0.9, 0.2, 0.1}, Gold{1, 0, 0}) == 1.0, "AP first");
  check(*avg_precision(Vec{0.9, 0.5, 0.1}, Gold{1, 0, 1}) == (1.0 + 2.0 / 3.0) / 2.0, "AP ranks 1,3");
  check(*avg_precision(Vec{0.9, 0.5, 0.4, 0.1}, Gold{0, 0, 0, 1}) == 1.0 / 4.0, "AP last");
  check(*one_error(Vec{0.9, 0.1}, Gold{1, 0}) == 0.0, "OneErr positive top");
  check(*one_error(Vec{0.9, 0.1}, Gold{0, 1}) == 1.0, "OneErr negative top");
  check(*one_error(Vec{0.7, 0.7}, Gold{0, 1}) == 1.0 && *one_error(Vec{0.7, 0.7}, Gold{1, 0}) == 0.0, "OneErr tie");
  check(std::abs(micro_f1({{1, 1, 1, 0}}, {{1, 1, 0, 1}}) - 200.0 / 3.0) < 1e-12, "F1 66.67");
  check(micro_f1({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}) == 100.0, "F1 perfect");
  check(micro_f1({{0, 0}}, {{1, 0}}) == 0.0, "F1 all-zero");
  check(EvalProtocol::policy_threshold(500, false) == 0.2, "threshold 500");

  LabelCatalog cat;
  for (int i = 0; i < 5; ++i) cat.add({"L" + std::to_string(i), {"w"}, true});
  Rng rng(8);
  std::vector<std::vector<std::size_t>> gold;
  for (int d = 0; d < 200; ++d) gold.push_back({rng.index(5)});
  const auto oracle = evaluate_scores(
      [&](std::size_t d, std::span<const std::size_t> c) {
        Vec s(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i] == gold[d][0] ? 5.0 : -5.0;
        return s;
      },
      gold, cat, EvalProtocol{});
  check(oracle.rank_loss == 0.0 && oracle.avg_precision == 100.0 && oracle.one_error == 0.0 && oracle.micro_f1 == 100.0,
        "oracle scorer");
  LabelCatalog two;
  two.add({"A", {"w"}, true});
  two.add({"B", {"w"}, true});
  std::vector<std::vector<std::size_t>> coin;
  for (int d = 0; d < 10000; ++d) coin.push_back({rng.index(2)});
  const auto random = evaluate_scores(
      [&](std::size_t, std::span<const std::size_t> c) { return test::random_vec(c.size(), rng); }, coin, two, EvalProtocol{});
  check(std::abs(random.one_error - 50.0) <= 3.0, "random OneErr " + fmt(random.one_error));

  std::size_t violations = 0;
  for (int t = 0; t < 100; ++t) {
    const double a = rng.uniform(0.1, 4.0), b = rng.uniform(-2.0, 2.0);
    std::function<double(double)> f;
    switch (t % 4) {
      case 0: f = [=](double x) { return a * x + b; }; break;
      case 1: f = [=](double x) { return std::exp(a * x) - b; }; break;
      case 2: f = [=](double x) { return a * x * x * x + x + b; }; break;
      default: f = [=](double x) { return std::atan(a * x) + b; }; break;
    }
    for (int inst = 0; inst < 20; ++inst) {
      const std::size_t n = 2 + rng.index(10);
      Vec s(n), fs(n);
      Gold g(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::round(rng.uniform(-2.0, 2.0) * 4.0) / 4.0;
        g[i] = rng.uniform() < 0.4;
        fs[i] = f(s[i]);
      }
      violations += rank_loss(s, g) != rank_loss(fs, g) || avg_precision(s, g) != avg_precision(fs, g) ||
                    one_error(s, g) != one_error(fs, g);
    }
  }
  check(violations == 0, std::to_string(violations) + " invariance violations");
  std::string detail = "14 examples, 100 monotone transforms x 20 instances";
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------

Verdict determinism() {
  test::ScratchDir dir("determinism");
  test::write_file(dir.file("d.ini"),
                   "[data]\ndir = data\n"
                   "[model]\nembed_dim = 8\nword_dim = 8\nsentence_dim = 8\nencoder = gru\n"
                   "[train]\nbatch_size = 16\nmax_epochs = 3\nlr = 0.01\nnegative_fraction = 0.5\nthreads = 1\nout = run\n"
                   "[synth]\ntopics = 6\nwords_per_topic = 8\nlabels = 10\ndocs_per_label = 20\n");
  CliOptions o;
  o.config = dir.file("d.ini");
  o.seed = 17;
  if (run_cli("synth", o) != kExitOk) return {false, "synth failed"};
  std::vector<std::string> best, last;
  for (int r = 0; r < 2; ++r) {
    std::filesystem::remove_all(dir.file("run"));
    if (run_cli("train", o) != kExitOk) return {false, "train failed"};
    best.push_back(test::read_file(dir.file("run/best.ckpt")));
    last.push_back(test::read_file(dir.file("run/last.ckpt")));
  }
  const bool same = !best[0].empty() && best[0] == best[1] && last[0] == last[1];
  return {same, "best.ckpt " + std::to_string(best[0].size()) + " bytes, last.ckpt " + std::to_string(last[0].size()) +
                    " bytes, " + (same ? "byte-identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"gradient fidelity", gradient_fidelity},
      {"degenerate equivalence", degenerate_equivalence},
      {"label-set-size independence", label_set_independence},
      {"sampling consistency", sampling_consistency},
      {"zero-shot reproduction", zero_shot},
      {"ablation ordering", ablation_ordering},
      {"label-sampling trade-off", sampling_tradeoff},
      {"multilingual sharing", multilingual_sharing},
      {"metric suite", metric_suite},
      {"determinism", determinism},
  };
  return all;
}

int run_one(std::size_t i) {
  const auto& c = criteria().at(i - 1);
  Verdict v;
  try {
    v = c.run();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "criterion " << i << " " << (v.pass ? "PASS" : "FAIL") << " " << c.name << ": " << v.detail << std::endl;
  return v.pass ? 0 : 1;
}

}  // namespace
}  // namespace gile::acceptance

int main(int argc, char** argv) {
  using gile::acceptance::criteria;
  using gile::acceptance::run_one;
  int failures = 0;
  if (argc < 2) {
    for (std::size_t i = 1; i <= criteria().size(); ++i) failures += run_one(i);
  } else {
    for (int a = 1; a < argc; ++a) {
      const int i = std::atoi(argv[a]);
      if (i < 1 || i > static_cast<int>(criteria().size())) {
        std::cerr << "usage: acceptance [1-" << criteria().size() << "]...\n";
        return 2;
      }
      failures += run_one(static_cast<std::size_t>(i));
    }
  }
  return failures == 0 ? 0 : 1;
}
