#pragma once
// Loss, negative label sampling, ADAM, mono- and multilingual training steps,
// the gradient-check harness and the epoch loop with early stopping.
//
// The batch loss is the binary cross-entropy summed over every scored
// (document, label) cell and divided by Z, the number of scored cells
// (positives plus sampled negatives). With fraction 1 this is the plain mean
// over all seen labels.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gile/corpus.hpp"
#include "gile/metrics.hpp"
#include "gile/model.hpp"
#include "gile/numkit.hpp"

namespace gile {

inline constexpr double kProbEpsilon = 1e-12;

/// One cell of the cross-entropy; probabilities are clamped to [eps, 1-eps].
inline double bce_term(double y, double p) {
  const double q = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

inline double bce_loss(std::span<const std::uint8_t> gold, std::span<const double> probs) {
  if (gold.size() != probs.size()) throw DimensionError("bce_loss: size mismatch");
  if (gold.empty()) throw DimensionError("bce_loss: empty input");
  double s = 0.0;
  for (std::size_t j = 0; j < gold.size(); ++j) s += bce_term(gold[j], probs[j]);
  return s / static_cast<double>(gold.size());
}

/// Number of negatives drawn from n at the given fraction. The small offset
/// keeps products like 0.003 * 26093 = 78.279... from rounding up past an
/// exact integer when the fraction is not representable.
inline std::size_t negative_sample_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("negative fraction must be in (0,1]");
  if (fraction == 1.0) return n;
  const double want = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, want)));
}

/// Uniform sample without replacement from `pool` minus `gold`; returned
/// sorted. `gold` must be sorted.
inline std::vector<std::size_t> sample_negatives(std::span<const std::size_t> gold, std::span<const std::size_t> pool,
                                                 double fraction, Rng& rng) {
  std::vector<std::size_t> negatives;
  negatives.reserve(pool.size());
  for (auto l : pool)
    if (!std::binary_search(gold.begin(), gold.end(), l)) negatives.push_back(l);
  const std::size_t count = negative_sample_count(negatives.size(), fraction);
  if (count < negatives.size()) {
    // partial Fisher-Yates: the first `count` slots become the sample
    for (std::size_t i = 0; i < count; ++i) std::swap(negatives[i], negatives[i + rng.index(negatives.size() - i)]);
    negatives.resize(count);
  }
  std::sort(negatives.begin(), negatives.end());
  return negatives;
}

/// Positives within the pool plus sampled negatives, sorted.
inline std::vector<std::size_t> sample_candidates(std::span<const std::size_t> gold, std::span<const std::size_t> pool,
                                                  double fraction, Rng& rng) {
  auto out = sample_negatives(gold, pool, fraction, rng);
  for (auto l : gold)
    if (std::find(pool.begin(), pool.end(), l) != pool.end()) out.push_back(l);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  struct Moments {
    Mat m;
    Mat v;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_config(const AdamConfig& cfg) { cfg_ = cfg; }
  std::uint64_t steps() const { return t_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }

  void restore(std::uint64_t t, std::map<std::string, Moments> moments) {
    t_ = t;
    moments_ = std::move(moments);
  }

  /// Bias-corrected update of every trainable entry from store.grads(), then
  /// zeroes the gradients.
  void step(ParamStore& store) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, g] : store.grads().buffers()) {
      Mat& w = store.mutable_value(name);
      auto it = moments_.find(name);
      if (it == moments_.end()) it = moments_.emplace(name, Moments{Mat(w.rows(), w.cols()), Mat(w.rows(), w.cols())}).first;
      auto& [m, v] = it->second;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g.data()[i];
        m.data()[i] = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * gi;
        v.data()[i] = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mh = m.data()[i] / c1;
        const double vh = v.data()[i] / c2;
        w.data()[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
      }
    }
    store.grads().zero();
  }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

// ---------------------------------------------------------------------------
// Batch loss and gradients over frozen candidate sets.

struct BatchLoss {
  double sum = 0.0;      // summed cross-entropy over scored cells
  std::size_t cells = 0; // Z
  double mean() const { return cells ? sum / static_cast<double>(cells) : 0.0; }
};

/// Loss of each document over its candidates, no gradients.
inline BatchLoss batch_loss(const Model& model, const ParamStore& store, std::span<const IndexedDocument* const> docs,
                            const std::vector<std::vector<std::size_t>>& candidates) {
  BatchLoss out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& cand = candidates[i];
    const Vec s = model.forward(store, *docs[i], cand);
    // Per-document partial sums, matching the gradient pass bit for bit.
    double sum = 0.0;
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const bool pos = std::binary_search(docs[i]->labels.begin(), docs[i]->labels.end(), cand[j]);
      sum += bce_term(pos ? 1.0 : 0.0, sigmoid(s[j]));
    }
    out.sum += sum;
    out.cells += cand.size();
  }
  return out;
}

namespace detail {

inline double doc_backward(const Model& model, const ParamStore& store, const IndexedDocument& doc,
                           const std::vector<std::size_t>& cand, double inv_z, Grads& grads) {
  Model::Pass pass;
  const Vec s = model.forward(store, doc, cand, &pass);
  Vec d(cand.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < cand.size(); ++j) {
    const double y = std::binary_search(doc.labels.begin(), doc.labels.end(), cand[j]) ? 1.0 : 0.0;
    const double p = sigmoid(s[j]);
    sum += bce_term(y, p);
    d[j] = (p - y) * inv_z;
  }
  model.backward(store, doc, pass, d, grads);
  return sum;
}

}  // namespace detail

/// Accumulates d(sum / Z)/dθ into `grads` and returns the loss. With
/// threads > 1 documents are split into contiguous chunks whose gradients
/// are summed in chunk order after all workers finish.
inline BatchLoss batch_gradients(const Model& model, const ParamStore& store,
                                 std::span<const IndexedDocument* const> docs,
                                 const std::vector<std::vector<std::size_t>>& candidates, Grads& grads,
                                 std::size_t threads = 1) {
  BatchLoss out;
  for (const auto& c : candidates) out.cells += c.size();
  if (out.cells == 0) return out;
  const double inv_z = 1.0 / static_cast<double>(out.cells);
  threads = std::max<std::size_t>(1, std::min(threads, docs.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i)
      out.sum += detail::doc_backward(model, store, *docs[i], candidates[i], inv_z, grads);
    return out;
  }
  std::vector<Grads> partial(threads, store.zero_grads_like());
  std::vector<double> sums(threads, 0.0);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (docs.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(docs.size(), (t + 1) * chunk); ++i)
          sums[t] += detail::doc_backward(model, store, *docs[i], candidates[i], inv_z, partial[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t t = 0; t < threads; ++t) {
    grads.accumulate(partial[t]);
    out.sum += sums[t];
  }
  return out;
}

/// Throws NumericError naming the first entry whose gradient is not finite.
inline void check_finite(const BatchLoss& loss, const ParamStore& store) {
  for (const auto& [name, g] : store.grads().buffers()) {
    for (double v : g.data())
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in parameter group '" + name + "'");
  }
  if (!std::isfinite(loss.sum)) throw NumericError("non-finite loss");
}

inline std::vector<std::vector<std::size_t>> sample_batch_candidates(std::span<const IndexedDocument* const> docs,
                                                                     std::span<const std::size_t> pool,
                                                                     double fraction, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(docs.size());
  for (const auto* d : docs) out.push_back(sample_candidates(d->labels, pool, fraction, rng));
  return out;
}

struct StepOptions {
  double negative_fraction = 1.0;
  std::size_t threads = 1;
};

/// Samples candidates, accumulates gradients and applies one ADAM update.
/// Returns the pre-update loss.
inline double step_monolingual(std::span<const IndexedDocument* const> batch, const Model& model, ParamStore& store,
                               Adam& adam, Rng& rng, const StepOptions& opt = {}) {
  if (batch.empty()) throw DimensionError("step: empty batch");
  const auto cand = sample_batch_candidates(batch, model.seen_labels(), opt.negative_fraction, rng);
  store.grads().zero();
  const BatchLoss loss = batch_gradients(model, store, batch, cand, store.grads(), opt.threads);
  check_finite(loss, store);
  adam.step(store);
  return loss.mean();
}

// ---------------------------------------------------------------------------
// Multilingual sharing.

/// Per-group flag: shared across languages or one copy per language.
struct SharingScheme {
  bool embeddings = true;
  bool word_encoder = false;
  bool word_attention = true;
  bool sentence_encoder = false;
  bool sentence_attention = true;
  bool joint = true;
  bool classifier = false;

  static const std::vector<std::string>& group_names() {
    static const std::vector<std::string> names{"embeddings",         "word_encoder", "word_attention",
                                                "sentence_encoder",   "sentence_attention", "joint",
                                                "classifier"};
    return names;
  }

  bool& flag(const std::string& group) {
    if (group == "embeddings") return embeddings;
    if (group == "word_encoder") return word_encoder;
    if (group == "word_attention") return word_attention;
    if (group == "sentence_encoder") return sentence_encoder;
    if (group == "sentence_attention") return sentence_attention;
    if (group == "joint") return joint;
    if (group == "classifier") return classifier;
    throw ConfigError("sharing scheme: unknown parameter group '" + group + "'");
  }
  bool shared(const std::string& group) const { return const_cast<SharingScheme*>(this)->flag(group); }

  static SharingScheme all_per_language() {
    SharingScheme s;
    for (const auto& g : group_names()) s.flag(g) = false;
    return s;
  }

  void validate() const {
    for (const auto& g : group_names())
      if (!shared(g)) return;
    throw ConfigError("sharing scheme: at least one parameter group must be per-language");
  }

  GroupPrefixes prefixes_for(const std::string& lang) const {
    const GroupPrefixes base;
    auto p = [&](bool is_shared, const std::string& name) { return is_shared ? name : lang + "/" + name; };
    GroupPrefixes out;
    out.embeddings = p(embeddings, base.embeddings);
    out.word_encoder = p(word_encoder, base.word_encoder);
    out.word_attention = p(word_attention, base.word_attention);
    out.sentence_encoder = p(sentence_encoder, base.sentence_encoder);
    out.sentence_attention = p(sentence_attention, base.sentence_attention);
    out.joint = p(joint, base.joint);
    out.classifier = p(classifier, base.classifier);
    return out;
  }
};

/// One language's view for a multilingual step.
struct LanguageBatch {
  const Model* model = nullptr;
  std::vector<const IndexedDocument*> docs;
  Rng* rng = nullptr;
};

/// Each language's gradient is normalized by its own scored-cell count and
/// the per-language gradients are summed into the store, so a shared entry
/// receives the sum and a language-specific entry only its own language's
/// term. Returns the pooled pre-update loss, sum over languages divided by
/// the total scored-cell count.
inline double step_multilingual(std::vector<LanguageBatch>& languages, ParamStore& store, Adam& adam,
                                const StepOptions& opt = {}) {
  if (languages.size() < 2) throw ConfigError("multilingual step needs at least two languages");
  store.grads().zero();
  BatchLoss total;
  for (auto& lang : languages) {
    if (!lang.model || !lang.rng) throw ConfigError("multilingual step: language view without model or rng");
    if (lang.docs.empty()) throw DimensionError("multilingual step: empty batch");
    const auto cand = sample_batch_candidates(lang.docs, lang.model->seen_labels(), opt.negative_fraction, *lang.rng);
    const BatchLoss l = batch_gradients(*lang.model, store, lang.docs, cand, store.grads(), opt.threads);
    total.sum += l.sum;
    total.cells += l.cells;
  }
  check_finite(total, store);
  adam.step(store);
  return total.mean();
}

// ---------------------------------------------------------------------------
// Gradient check.

struct GradCheckEntry {
  std::string name;
  double rel_error = 0.0;
  double fd_norm = 0.0;
  std::size_t checked = 0;
  std::size_t kink_skipped = 0;
  bool pass = false;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
  }
  const GradCheckEntry& worst() const {
    if (entries.empty()) throw Error("grad_check: empty report");
    return *std::max_element(entries.begin(), entries.end(),
                             [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (!e.pass) out.push_back(e.name);
    return out;
  }
  std::size_t kink_skipped() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.kink_skipped;
    return n;
  }
};

/// Compares analytic gradients of the batch loss over frozen candidate sets
/// with central differences, per parameter entry:
///   rel = max|g_analytic - g_fd| / (max|g_fd| + 1e-8)
/// Probes straddling a ReLU kink are left out of both maxima and counted;
/// an entry with no usable probe fails. `sabotage` names an entry whose
/// analytic gradient is negated before comparison.
inline GradCheckReport grad_check(const Model& model, ParamStore& store, std::span<const IndexedDocument* const> docs,
                                  const std::vector<std::vector<std::size_t>>& candidates, double tolerance,
                                  double eps = 1e-3, const std::string& sabotage = "") {
  Grads analytic = store.zero_grads_like();
  batch_gradients(model, store, docs, candidates, analytic);
  if (!sabotage.empty()) {
    Mat& g = analytic.at(sabotage);
    for (double& v : g.data()) v = -v;
  }
  KinkMask kinks;
  const auto fd = finite_diff_grad(
      [&](const ParamStore& s) { return batch_loss(model, s, docs, candidates).mean(); }, store, eps, {}, &kinks);
  GradCheckReport rep;
  rep.tolerance = tolerance;
  for (const auto& [name, g_fd] : fd) {
    const Mat& g_an = analytic.at(name);
    const auto& mask = kinks.at(name);
    GradCheckEntry e;
    e.name = name;
    double diff = 0.0;
    for (std::size_t i = 0; i < g_fd.size(); ++i) {
      if (mask[i]) {
        ++e.kink_skipped;
        continue;
      }
      ++e.checked;
      diff = std::max(diff, std::abs(g_an.data()[i] - g_fd.data()[i]));
      e.fd_norm = std::max(e.fd_norm, std::abs(g_fd.data()[i]));
    }
    e.rel_error = diff / (e.fd_norm + 1e-8);
    e.pass = e.checked > 0 && e.rel_error <= tolerance;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Evaluation of a model under the seen/unseen protocol.

inline MetricsReport evaluate_model(const Model& model, const ParamStore& store,
                                    const std::vector<IndexedDocument>& docs, const LabelCatalog& catalog,
                                    const EvalProtocol& protocol) {
  if ((protocol.scope == Scope::unseen || protocol.mixed_candidates) && !model.supports_unseen()) {
    throw UnsupportedError("linear output layer cannot score labels unseen during training");
  }
  std::vector<std::vector<std::size_t>> gold;
  gold.reserve(docs.size());
  for (const auto& d : docs) gold.push_back(d.labels);
  return evaluate_scores(
      [&](std::size_t i, std::span<const std::size_t> cand) { return model.forward(store, docs[i], cand); }, gold,
      catalog, protocol);
}

/// Mean cross-entropy over every seen label of every document.
inline double full_loss(const Model& model, const ParamStore& store, const std::vector<IndexedDocument>& docs) {
  if (docs.empty()) return 0.0;
  std::vector<const IndexedDocument*> ptrs;
  std::vector<std::vector<std::size_t>> cand;
  for (const auto& d : docs) {
    ptrs.push_back(&d);
    cand.push_back(model.seen_labels());
  }
  return batch_loss(model, store, ptrs, cand).mean();
}

// ---------------------------------------------------------------------------
// Epoch loop.

enum class StopMetric { avg_precision, micro_f1 };

inline std::string to_string(StopMetric m) { return m == StopMetric::avg_precision ? "avg_precision" : "micro_f1"; }
inline StopMetric parse_stop_metric(const std::string& s) {
  if (s == "avg_precision") return StopMetric::avg_precision;
  if (s == "micro_f1") return StopMetric::micro_f1;
  throw ConfigError("unknown early-stop metric '" + s + "'");
}

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epoch_size = 0;  // examples per epoch; 0 = one pass over the corpus
  std::size_t max_epochs = 10;
  AdamConfig adam;
  double negative_fraction = 1.0;
  std::uint64_t seed = 1;
  std::size_t max_sentences = 30;
  std::size_t max_words = 30;
  std::size_t patience = 5;  // evaluations without improvement
  StopMetric stop_metric = StopMetric::avg_precision;
  std::size_t threads = 1;

  void validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be > 0");
    if (max_epochs == 0) throw ConfigError("max_epochs must be > 0");
    if (patience == 0) throw ConfigError("patience must be > 0");
    if (max_sentences == 0 || max_words == 0) throw ConfigError("truncation limits must be > 0");
    if (!(adam.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ConfigError("adam moments must be in [0,1)");
    }
    if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be > 0");
    if (!(negative_fraction > 0.0 && negative_fraction <= 1.0)) throw ConfigError("negative fraction must be in (0,1]");
    if (threads == 0) throw ConfigError("threads must be > 0");
  }
};

struct LogRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

/// Resumable loop position.
struct TrainState {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  double best_metric = -1.0;
  std::size_t best_epoch = 0;
  std::size_t bad_evals = 0;
  bool stopped = false;
};

struct TrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double best_metric = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  std::uint64_t steps = 0;
  double step_ms_total = 0.0;
  double mean_step_ms() const { return steps ? step_ms_total / static_cast<double>(steps) : 0.0; }
};

struct TrainHooks {
  std::function<void(const LogRecord&)> on_step;
  std::function<void(std::size_t epoch, const MetricsReport&)> on_eval;
  /// Called after each epoch with the loop state, for checkpointing.
  std::function<void(const TrainState&)> on_epoch;
  std::function<void(const TrainState&)> on_best;
};

/// Trains until max_epochs or early stop. `store` ends holding the best
/// validation parameters when validation data is given, else the last.
inline TrainResult train(const Model& model, ParamStore& store, Adam& adam, Rng& rng,
                         const std::vector<IndexedDocument>& train_docs, const std::vector<IndexedDocument>& valid_docs,
                         const LabelCatalog& catalog, const TrainConfig& cfg, const EvalProtocol& protocol,
                         const TrainHooks& hooks = {}, TrainState state = {},
                         const ParamStore* resume_best = nullptr) {
  cfg.validate();
  if (train_docs.empty()) throw ConfigError("no training documents");
  using clock = std::chrono::steady_clock;
  TrainResult res;
  res.initial_loss = full_loss(model, store, train_docs);
  const std::size_t per_epoch = cfg.epoch_size ? cfg.epoch_size : train_docs.size();
  auto refill = [&] {
    state.order.resize(train_docs.size());
    for (std::size_t i = 0; i < state.order.size(); ++i) state.order[i] = i;
    rng.shuffle(state.order);
    state.cursor = 0;
  };
  if (state.order.empty()) refill();
  std::optional<ParamStore> best;
  if (resume_best) best = *resume_best;
  const StepOptions opt{cfg.negative_fraction, cfg.threads};

  while (state.epoch < cfg.max_epochs && !state.stopped) {
    std::size_t seen = 0;
    while (seen < per_epoch) {
      std::vector<const IndexedDocument*> batch;
      const std::size_t n = std::min(cfg.batch_size, per_epoch - seen);
      for (std::size_t i = 0; i < n; ++i) {
        if (state.cursor == state.order.size()) refill();
        batch.push_back(&train_docs[state.order[state.cursor++]]);
      }
      seen += n;
      const auto t0 = clock::now();
      const double loss = step_monolingual(batch, model, store, adam, rng, opt);
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      ++state.step;
      ++res.steps;
      res.step_ms_total += ms;
      if (hooks.on_step) hooks.on_step({state.step, loss, ms});
    }
    ++state.epoch;
    if (!valid_docs.empty()) {
      EvalProtocol p = protocol;
      p.scope = Scope::seen;
      const auto rep = evaluate_model(model, store, valid_docs, catalog, p);
      if (hooks.on_eval) hooks.on_eval(state.epoch, rep);
      const double metric = cfg.stop_metric == StopMetric::avg_precision ? rep.avg_precision : rep.micro_f1;
      if (metric > state.best_metric) {
        state.best_metric = metric;
        state.best_epoch = state.epoch;
        state.bad_evals = 0;
        best = store;
        if (hooks.on_best) hooks.on_best(state);
      } else if (++state.bad_evals >= cfg.patience) {
        state.stopped = true;
      }
    }
    if (hooks.on_epoch) hooks.on_epoch(state);
  }
  if (best) store = std::move(*best);
  res.final_loss = full_loss(model, store, train_docs);
  res.best_metric = state.best_metric;
  res.best_epoch = state.best_epoch;
  res.epochs = state.epoch;
  return res;
}

/// One language's share of a multilingual run.
struct LanguageData {
  std::string lang;
  const Model* model = nullptr;
  const std::vector<IndexedDocument>* train = nullptr;
  const std::vector<IndexedDocument>* valid = nullptr;
  Rng* rng = nullptr;
};

/// Multilingual counterpart of train(): every step draws batch_size
/// documents from each language and applies one joint update. An epoch is
/// epoch_size examples of the largest language (its full set when 0).
/// Early stopping uses the mean validation metric over languages.
inline TrainResult train_multilingual(std::vector<LanguageData>& langs, ParamStore& store, Adam& adam,
                                      const LabelCatalog& catalog, const TrainConfig& cfg,
                                      const EvalProtocol& protocol, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (langs.size() < 2) throw ConfigError("multilingual training needs at least two languages");
  using clock = std::chrono::steady_clock;
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
  };
  std::vector<Cursor> cursors(langs.size());
  std::size_t largest = 0;
  for (const auto& l : langs) {
    if (!l.model || !l.train || !l.rng) throw ConfigError("language '" + l.lang + "' is incomplete");
    if (l.train->empty()) throw ConfigError("no training documents for language '" + l.lang + "'");
    largest = std::max(largest, l.train->size());
  }
  auto refill = [&](std::size_t i) {
    auto& c = cursors[i];
    c.order.resize(langs[i].train->size());
    for (std::size_t k = 0; k < c.order.size(); ++k) c.order[k] = k;
    langs[i].rng->shuffle(c.order);
    c.pos = 0;
  };
  auto mean_loss = [&] {
    double s = 0.0;
    for (const auto& l : langs) s += full_loss(*l.model, store, *l.train);
    return s / static_cast<double>(langs.size());
  };

  TrainResult res;
  TrainState state;
  res.initial_loss = mean_loss();
  for (std::size_t i = 0; i < langs.size(); ++i) refill(i);
  const std::size_t per_epoch = cfg.epoch_size ? cfg.epoch_size : largest;
  const StepOptions opt{cfg.negative_fraction, cfg.threads};
  std::optional<ParamStore> best;

  while (state.epoch < cfg.max_epochs && !state.stopped) {
    for (std::size_t seen = 0; seen < per_epoch;) {
      const std::size_t n = std::min(cfg.batch_size, per_epoch - seen);
      std::vector<LanguageBatch> batches;
      for (std::size_t i = 0; i < langs.size(); ++i) {
        LanguageBatch b{langs[i].model, {}, langs[i].rng};
        for (std::size_t k = 0; k < n; ++k) {
          if (cursors[i].pos == cursors[i].order.size()) refill(i);
          b.docs.push_back(&(*langs[i].train)[cursors[i].order[cursors[i].pos++]]);
        }
        batches.push_back(std::move(b));
      }
      seen += n;
      const auto t0 = clock::now();
      const double loss = step_multilingual(batches, store, adam, opt);
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      ++state.step;
      ++res.steps;
      res.step_ms_total += ms;
      if (hooks.on_step) hooks.on_step({state.step, loss, ms});
    }
    ++state.epoch;
    double metric = 0.0;
    std::size_t evaluated = 0;
    for (const auto& l : langs) {
      if (!l.valid || l.valid->empty()) continue;
      EvalProtocol p = protocol;
      p.scope = Scope::seen;
      const auto rep = evaluate_model(*l.model, store, *l.valid, catalog, p);
      if (hooks.on_eval) hooks.on_eval(state.epoch, rep);
      metric += cfg.stop_metric == StopMetric::avg_precision ? rep.avg_precision : rep.micro_f1;
      ++evaluated;
    }
    if (evaluated) {
      metric /= static_cast<double>(evaluated);
      if (metric > state.best_metric) {
        state.best_metric = metric;
        state.best_epoch = state.epoch;
        state.bad_evals = 0;
        best = store;
        if (hooks.on_best) hooks.on_best(state);
      } else if (++state.bad_evals >= cfg.patience) {
        state.stopped = true;
      }
    }
    if (hooks.on_epoch) hooks.on_epoch(state);
  }
  if (best) store = std::move(*best);
  res.final_loss = mean_loss();
  res.best_metric = state.best_metric;
  res.best_epoch = state.best_epoch;
  res.epochs = state.epoch;
  return res;
}

}  // namespace gile
