#pragma once
// Document encoders: flat average (NN), hierarchical average (HNN) and
// hierarchical attention (HAN) over Dense, GRU or BiGRU cells. Every forward
// pass can record a trace that the matching backward pass consumes.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gile/corpus.hpp"
#include "gile/embed.hpp"
#include "gile/numkit.hpp"

namespace gile {

enum class CellKind { dense, gru, bigru };
enum class Pooling { attention, average, flat_average };

inline std::string to_string(CellKind k) {
  switch (k) {
    case CellKind::dense: return "dense";
    case CellKind::gru: return "gru";
    case CellKind::bigru: return "bigru";
  }
  return "?";
}

inline CellKind parse_cell_kind(const std::string& s) {
  if (s == "dense") return CellKind::dense;
  if (s == "gru") return CellKind::gru;
  if (s == "bigru") return CellKind::bigru;
  throw ConfigError("unknown encoder kind '" + s + "'");
}

inline std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::attention: return "attention";
    case Pooling::average: return "average";
    case Pooling::flat_average: return "flat-average";
  }
  return "?";
}

inline Pooling parse_pooling(const std::string& s) {
  if (s == "attention") return Pooling::attention;
  if (s == "average") return Pooling::average;
  if (s == "flat-average" || s == "flat_average") return Pooling::flat_average;
  throw ConfigError("unknown pooling '" + s + "'");
}

struct EncoderSpec {
  CellKind kind = CellKind::dense;
  Pooling pooling = Pooling::attention;
  std::size_t word_dim = 100;      // d_w
  std::size_t sentence_dim = 100;  // d_h
  Activation dense_activation = Activation::relu;

  void validate() const {
    if (pooling == Pooling::flat_average) return;
    if (word_dim == 0 || sentence_dim == 0) throw ConfigError("encoder dims must be > 0");
    if (kind == CellKind::bigru && (word_dim % 2 != 0 || sentence_dim % 2 != 0)) {
      throw ConfigError("bigru encoder needs even word and sentence dims");
    }
  }
};

namespace detail {

inline Mat* grad_or_null(Grads& g, const std::string& name) { return g.has(name) ? &g.at(name) : nullptr; }

inline void require_dim(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected dim " + std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

inline Vec affine(const Mat& w, std::span<const double> x, const Mat& b) {
  Vec y = matvec(w, x);
  axpy(1.0, b.data(), y);
  return y;
}

}  // namespace detail

/// Standard gated recurrent unit; the reset gate scales the previous state
/// before the candidate projection.
///   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br)
///   n = tanh(Wn x + Un (r*h) + bn), h' = z*h + (1-z)*n
class GruCell {
 public:
  GruCell(std::size_t in_dim, std::size_t hidden, std::string prefix)
      : in_(in_dim), hidden_(hidden), prefix_(std::move(prefix)) {}

  struct Step {
    Vec x, h_prev, z, r, n, h;
  };

  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    for (const char* g : {"z", "r", "n"})
      for (const char* p : {"W", "U", "b"}) out.push_back(name(p, g));
    return out;
  }

  void init(ParamStore& store, Rng& rng) const {
    for (const char* g : {"z", "r", "n"}) {
      store.add(name("W", g), glorot_uniform(hidden_, in_, rng));
      store.add(name("U", g), glorot_uniform(hidden_, hidden_, rng));
      store.add(name("b", g), Mat(hidden_, 1));
    }
  }

  std::vector<Vec> forward(const ParamStore& store, const std::vector<Vec>& xs, bool reverse,
                           std::vector<Step>* trace) const {
    const std::size_t T = xs.size();
    std::vector<Vec> hs(T);
    Vec h(hidden_, 0.0);
    if (trace) trace->assign(T, {});
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t t = reverse ? T - 1 - k : k;
      detail::require_dim(xs[t], in_, "gru input");
      Step s;
      s.x = xs[t];
      s.h_prev = h;
      s.z = gate(store, "z", s.x, h);
      apply_inplace(s.z, Activation::sigmoid);
      s.r = gate(store, "r", s.x, h);
      apply_inplace(s.r, Activation::sigmoid);
      Vec rh(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) rh[i] = s.r[i] * h[i];
      s.n = gate(store, "n", s.x, rh);
      apply_inplace(s.n, Activation::tanh);
      s.h.resize(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) s.h[i] = s.z[i] * h[i] + (1.0 - s.z[i]) * s.n[i];
      h = s.h;
      hs[t] = h;
      if (trace) (*trace)[t] = std::move(s);
    }
    return hs;
  }

  /// d_out[t] is the gradient w.r.t. the emitted state at position t.
  std::vector<Vec> backward(const ParamStore& store, const std::vector<Step>& trace, const std::vector<Vec>& d_out,
                            bool reverse, Grads& grads) const {
    const std::size_t T = trace.size();
    std::vector<Vec> dx(T, Vec(in_, 0.0));
    Vec dh_next(hidden_, 0.0);  // gradient flowing from the later step in processing order
    for (std::size_t k = T; k-- > 0;) {
      const std::size_t t = reverse ? T - 1 - k : k;
      const Step& s = trace[t];
      Vec dh(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) dh[i] = d_out[t][i] + dh_next[i];

      Vec dh_prev(hidden_, 0.0);
      Vec da_z(hidden_), da_n(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) {
        dh_prev[i] = dh[i] * s.z[i];
        const double dz = dh[i] * (s.h_prev[i] - s.n[i]);
        const double dn = dh[i] * (1.0 - s.z[i]);
        da_z[i] = dz * s.z[i] * (1.0 - s.z[i]);
        da_n[i] = dn * (1.0 - s.n[i] * s.n[i]);
      }
      Vec rh(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) rh[i] = s.r[i] * s.h_prev[i];
      Vec d_rh(hidden_, 0.0);
      add_matvec_t(store.value(name("U", "n")), da_n, d_rh);
      Vec da_r(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) {
        dh_prev[i] += d_rh[i] * s.r[i];
        const double dr = d_rh[i] * s.h_prev[i];
        da_r[i] = dr * s.r[i] * (1.0 - s.r[i]);
      }

      accumulate(store, grads, "n", da_n, s.x, rh, dx[t], nullptr);
      accumulate(store, grads, "z", da_z, s.x, s.h_prev, dx[t], &dh_prev);
      accumulate(store, grads, "r", da_r, s.x, s.h_prev, dx[t], &dh_prev);
      dh_next = std::move(dh_prev);
    }
    return dx;
  }

  std::size_t hidden() const { return hidden_; }

 private:
  std::string name(const char* p, const char* g) const { return prefix_ + "." + p + g; }

  Vec gate(const ParamStore& store, const char* g, std::span<const double> x, std::span<const double> h) const {
    Vec a = matvec(store.value(name("W", g)), x);
    axpy(1.0, matvec(store.value(name("U", g)), h), a);
    axpy(1.0, store.value(name("b", g)).data(), a);
    return a;
  }

  // Parameter gradients for one gate plus input gradient into dx. The
  // candidate gate's recurrent path goes through r*h and is handled by the
  // caller, so it passes dh == nullptr.
  void accumulate(const ParamStore& store, Grads& grads, const char* g, const Vec& da, const Vec& x,
                  const Vec& h_in, Vec& dx, Vec* dh) const {
    if (Mat* gw = detail::grad_or_null(grads, name("W", g))) add_outer(*gw, da, x);
    if (Mat* gu = detail::grad_or_null(grads, name("U", g))) add_outer(*gu, da, h_in);
    if (Mat* gb = detail::grad_or_null(grads, name("b", g))) axpy(1.0, da, gb->data());
    add_matvec_t(store.value(name("W", g)), da, dx);
    if (dh) add_matvec_t(store.value(name("U", g)), da, *dh);
  }

  std::size_t in_;
  std::size_t hidden_;
  std::string prefix_;
};

/// Per-position sequence encoder g: Dense, GRU or BiGRU.
class SequenceEncoder {
 public:
  struct Trace {
    std::vector<Vec> inputs;
    std::vector<Vec> outputs;
    std::vector<GruCell::Step> fwd, bwd;
  };

  SequenceEncoder(CellKind kind, std::size_t in_dim, std::size_t out_dim, Activation act, std::string prefix)
      : kind_(kind),
        in_(in_dim),
        out_(out_dim),
        act_(act),
        prefix_(std::move(prefix)),
        fwd_(in_dim, kind == CellKind::bigru ? out_dim / 2 : out_dim, prefix_ + (kind == CellKind::bigru ? ".fwd" : "")),
        bwd_(in_dim, out_dim / 2, prefix_ + ".bwd") {
    if (kind == CellKind::bigru && out_dim % 2 != 0) throw ConfigError("bigru output dim must be even");
  }

  std::size_t input_dim() const { return in_; }
  std::size_t output_dim() const { return out_; }

  std::vector<std::string> param_names() const {
    switch (kind_) {
      case CellKind::dense: return {prefix_ + ".W", prefix_ + ".b"};
      case CellKind::gru: return fwd_.param_names();
      case CellKind::bigru: {
        auto a = fwd_.param_names();
        auto b = bwd_.param_names();
        a.insert(a.end(), b.begin(), b.end());
        return a;
      }
    }
    return {};
  }

  void init(ParamStore& store, Rng& rng) const {
    switch (kind_) {
      case CellKind::dense:
        store.add(prefix_ + ".W", glorot_uniform(out_, in_, rng));
        store.add(prefix_ + ".b", Mat(out_, 1));
        break;
      case CellKind::gru: fwd_.init(store, rng); break;
      case CellKind::bigru:
        fwd_.init(store, rng);
        bwd_.init(store, rng);
        break;
    }
  }

  std::vector<Vec> forward(const ParamStore& store, const std::vector<Vec>& xs, Trace* trace) const {
    if (xs.empty()) throw DimensionError("encode_sequence: empty sequence");
    std::vector<Vec> out;
    switch (kind_) {
      case CellKind::dense: {
        const Mat& w = store.value(prefix_ + ".W");
        const Mat& b = store.value(prefix_ + ".b");
        out.reserve(xs.size());
        for (const auto& x : xs) {
          detail::require_dim(x, in_, "dense input");
          Vec y = detail::affine(w, x, b);
          apply_inplace(y, act_);
          out.push_back(std::move(y));
        }
        break;
      }
      case CellKind::gru: out = fwd_.forward(store, xs, false, trace ? &trace->fwd : nullptr); break;
      case CellKind::bigru: {
        auto f = fwd_.forward(store, xs, false, trace ? &trace->fwd : nullptr);
        auto b = bwd_.forward(store, xs, true, trace ? &trace->bwd : nullptr);
        out.resize(xs.size());
        for (std::size_t t = 0; t < xs.size(); ++t) {
          out[t] = std::move(f[t]);
          out[t].insert(out[t].end(), b[t].begin(), b[t].end());
        }
        break;
      }
    }
    if (trace) {
      trace->inputs = xs;
      trace->outputs = out;
    }
    return out;
  }

  /// Returns gradients w.r.t. the inputs.
  std::vector<Vec> backward(const ParamStore& store, const Trace& trace, const std::vector<Vec>& d_out,
                            Grads& grads) const {
    const std::size_t T = trace.inputs.size();
    switch (kind_) {
      case CellKind::dense: {
        const Mat& w = store.value(prefix_ + ".W");
        Mat* gw = detail::grad_or_null(grads, prefix_ + ".W");
        Mat* gb = detail::grad_or_null(grads, prefix_ + ".b");
        std::vector<Vec> dx(T, Vec(in_, 0.0));
        for (std::size_t t = 0; t < T; ++t) {
          Vec da(out_);
          for (std::size_t i = 0; i < out_; ++i) da[i] = d_out[t][i] * activation_grad(trace.outputs[t][i], act_);
          if (gw) add_outer(*gw, da, trace.inputs[t]);
          if (gb) axpy(1.0, da, gb->data());
          add_matvec_t(w, da, dx[t]);
        }
        return dx;
      }
      case CellKind::gru: return fwd_.backward(store, trace.fwd, d_out, false, grads);
      case CellKind::bigru: {
        const std::size_t half = out_ / 2;
        std::vector<Vec> df(T), db(T);
        for (std::size_t t = 0; t < T; ++t) {
          df[t].assign(d_out[t].begin(), d_out[t].begin() + static_cast<std::ptrdiff_t>(half));
          db[t].assign(d_out[t].begin() + static_cast<std::ptrdiff_t>(half), d_out[t].end());
        }
        auto dx = fwd_.backward(store, trace.fwd, df, false, grads);
        auto dxb = bwd_.backward(store, trace.bwd, db, true, grads);
        for (std::size_t t = 0; t < T; ++t) axpy(1.0, dxb[t], dx[t]);
        return dx;
      }
    }
    return {};
  }

 private:
  CellKind kind_;
  std::size_t in_;
  std::size_t out_;
  Activation act_;
  std::string prefix_;
  GruCell fwd_;
  GruCell bwd_;
};

struct AttentionResult {
  Vec weights;
  Vec pooled;
};

/// weights = softmax_t(tanh(W h_t + b) . u), pooled = sum_t weights_t h_t
inline AttentionResult attend(const std::vector<Vec>& states, const Mat& w, const Mat& b, const Mat& u,
                              std::vector<Vec>* projections = nullptr) {
  if (states.empty()) throw DimensionError("attend: empty states");
  if (w.rows() != u.size() || b.size() != w.rows()) {
    throw DimensionError("attend: projection " + w.shape_str() + " vs context " + u.shape_str());
  }
  Vec scores(states.size());
  if (projections) projections->resize(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    Vec v = detail::affine(w, states[t], b);
    apply_inplace(v, Activation::tanh);
    scores[t] = dot(v, u.data());
    if (projections) (*projections)[t] = std::move(v);
  }
  AttentionResult r;
  r.weights = softmax_normalize(scores);
  r.pooled.assign(states.front().size(), 0.0);
  for (std::size_t t = 0; t < states.size(); ++t) axpy(r.weights[t], states[t], r.pooled);
  return r;
}

class AttentionPool {
 public:
  struct Trace {
    std::vector<Vec> states;
    std::vector<Vec> projections;
    Vec weights;
  };

  AttentionPool(std::size_t dim, std::string prefix) : dim_(dim), prefix_(std::move(prefix)) {}

  std::vector<std::string> param_names() const { return {prefix_ + ".W", prefix_ + ".b", prefix_ + ".u"}; }

  void init(ParamStore& store, Rng& rng) const {
    store.add(prefix_ + ".W", glorot_uniform(dim_, dim_, rng));
    store.add(prefix_ + ".b", Mat(dim_, 1));
    store.add(prefix_ + ".u", scaled_normal(dim_, 1, 0.01, rng));
  }

  Vec forward(const ParamStore& store, const std::vector<Vec>& states, Trace* trace) const {
    std::vector<Vec> proj;
    auto r = attend(states, store.value(prefix_ + ".W"), store.value(prefix_ + ".b"), store.value(prefix_ + ".u"),
                    trace ? &proj : nullptr);
    if (trace) {
      trace->states = states;
      trace->projections = std::move(proj);
      trace->weights = r.weights;
    }
    return r.pooled;
  }

  std::vector<Vec> backward(const ParamStore& store, const Trace& trace, std::span<const double> d_pooled,
                            Grads& grads) const {
    const std::size_t T = trace.states.size();
    const Mat& w = store.value(prefix_ + ".W");
    const Mat& u = store.value(prefix_ + ".u");
    Mat* gw = detail::grad_or_null(grads, prefix_ + ".W");
    Mat* gb = detail::grad_or_null(grads, prefix_ + ".b");
    Mat* gu = detail::grad_or_null(grads, prefix_ + ".u");

    std::vector<Vec> d_states(T);
    Vec d_weight(T);
    double weighted = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      d_states[t].assign(dim_, 0.0);
      axpy(trace.weights[t], d_pooled, d_states[t]);
      d_weight[t] = dot(trace.states[t], d_pooled);
      weighted += trace.weights[t] * d_weight[t];
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double d_score = trace.weights[t] * (d_weight[t] - weighted);
      const Vec& v = trace.projections[t];
      if (gu) axpy(d_score, v, gu->data());
      Vec da(dim_);
      for (std::size_t i = 0; i < dim_; ++i) da[i] = d_score * u.data()[i] * (1.0 - v[i] * v[i]);
      if (gw) add_outer(*gw, da, trace.states[t]);
      if (gb) axpy(1.0, da, gb->data());
      add_matvec_t(w, da, d_states[t]);
    }
    return d_states;
  }

 private:
  std::size_t dim_;
  std::string prefix_;
};

/// Where each parameter group lives in the store; multilingual views map the
/// same group to a shared or a language-specific prefix.
struct GroupPrefixes {
  std::string embeddings = "embed";
  std::string word_encoder = "word_enc";
  std::string word_attention = "word_att";
  std::string sentence_encoder = "sent_enc";
  std::string sentence_attention = "sent_att";
  std::string joint = "joint";
  std::string classifier = "cls";
};

/// Maps an indexed document to h. The embedding table is passed in by the
/// caller (it is shared with the label encoder).
class DocumentEncoder {
 public:
  struct Trace {
    std::vector<SequenceEncoder::Trace> word_enc;
    std::vector<AttentionPool::Trace> word_att;
    std::vector<std::size_t> sentence_lengths;
    SequenceEncoder::Trace sent_enc;
    AttentionPool::Trace sent_att;
    std::size_t sentence_count = 0;
  };

  DocumentEncoder(const EncoderSpec& spec, std::size_t embed_dim, const GroupPrefixes& prefixes)
      : spec_(spec),
        embed_dim_(embed_dim),
        word_enc_(spec.kind, embed_dim, spec.word_dim, spec.dense_activation, prefixes.word_encoder),
        sent_enc_(spec.kind, spec.word_dim, spec.sentence_dim, spec.dense_activation, prefixes.sentence_encoder),
        word_att_(spec.word_dim, prefixes.word_attention),
        sent_att_(spec.sentence_dim, prefixes.sentence_attention) {
    spec_.validate();
  }

  const EncoderSpec& spec() const { return spec_; }

  std::size_t output_dim() const {
    return spec_.pooling == Pooling::flat_average ? embed_dim_ : spec_.sentence_dim;
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    if (spec_.pooling == Pooling::flat_average) return out;
    for (const auto& n : word_enc_.param_names()) out.push_back(n);
    for (const auto& n : sent_enc_.param_names()) out.push_back(n);
    if (spec_.pooling == Pooling::attention) {
      for (const auto& n : word_att_.param_names()) out.push_back(n);
      for (const auto& n : sent_att_.param_names()) out.push_back(n);
    }
    return out;
  }

  /// Adds this encoder's entries that are not already in the store (shared
  /// groups are initialized once by the first language view).
  void init(ParamStore& store, Rng& rng) const {
    if (spec_.pooling == Pooling::flat_average) return;
    init_if_absent(store, rng, word_enc_);
    init_if_absent(store, rng, sent_enc_);
    if (spec_.pooling == Pooling::attention) {
      init_if_absent(store, rng, word_att_);
      init_if_absent(store, rng, sent_att_);
    }
  }

  Vec forward(const ParamStore& store, const Mat& table, const IndexedDocument& doc, Trace* trace) const {
    if (doc.sentences.empty()) throw DimensionError("encode_document: empty document");
    if (spec_.pooling == Pooling::flat_average) {
      Vec h(embed_dim_, 0.0);
      std::size_t n = 0;
      for (const auto& s : doc.sentences)
        for (auto t : s) {
          axpy(1.0, lookup(table, t), h);
          ++n;
        }
      if (n == 0) throw DimensionError("encode_document: empty document");
      for (double& v : h) v /= static_cast<double>(n);
      if (trace) trace->sentence_count = n;
      return h;
    }
    const bool att = spec_.pooling == Pooling::attention;
    const std::size_t K = doc.sentences.size();
    if (trace) {
      trace->word_enc.assign(K, {});
      trace->word_att.assign(K, {});
      trace->sentence_lengths.assign(K, 0);
      trace->sentence_count = K;
    }
    std::vector<Vec> sentence_vecs(K);
    for (std::size_t i = 0; i < K; ++i) {
      const auto& s = doc.sentences[i];
      if (s.empty()) throw DimensionError("encode_document: empty sentence");
      std::vector<Vec> xs;
      xs.reserve(s.size());
      for (auto t : s) {
        auto row = lookup(table, t);
        xs.emplace_back(row.begin(), row.end());
      }
      auto hs = word_enc_.forward(store, xs, trace ? &trace->word_enc[i] : nullptr);
      sentence_vecs[i] = att ? word_att_.forward(store, hs, trace ? &trace->word_att[i] : nullptr) : mean(hs);
      if (trace) trace->sentence_lengths[i] = s.size();
    }
    auto hs = sent_enc_.forward(store, sentence_vecs, trace ? &trace->sent_enc : nullptr);
    return att ? sent_att_.forward(store, hs, trace ? &trace->sent_att : nullptr) : mean(hs);
  }

  /// Accumulates parameter gradients; embedding-row gradients go to d_table
  /// when it is non-null.
  void backward(const ParamStore& store, const IndexedDocument& doc, const Trace& trace, std::span<const double> d_h,
                Grads& grads, Mat* d_table) const {
    if (spec_.pooling == Pooling::flat_average) {
      if (!d_table) return;
      const double inv = 1.0 / static_cast<double>(trace.sentence_count);
      for (const auto& s : doc.sentences)
        for (auto t : s) axpy(inv, d_h, d_table->row(t));
      return;
    }
    const bool att = spec_.pooling == Pooling::attention;
    const std::size_t K = trace.sentence_count;
    std::vector<Vec> d_sent_states =
        att ? sent_att_.backward(store, trace.sent_att, d_h, grads) : mean_backward(d_h, K);
    auto d_sentence_vecs = sent_enc_.backward(store, trace.sent_enc, d_sent_states, grads);
    for (std::size_t i = 0; i < K; ++i) {
      const std::size_t T = trace.sentence_lengths[i];
      std::vector<Vec> d_word_states =
          att ? word_att_.backward(store, trace.word_att[i], d_sentence_vecs[i], grads)
              : mean_backward(d_sentence_vecs[i], T);
      auto dx = word_enc_.backward(store, trace.word_enc[i], d_word_states, grads);
      if (d_table) {
        const auto& s = doc.sentences[i];
        for (std::size_t t = 0; t < T; ++t) axpy(1.0, dx[t], d_table->row(s[t]));
      }
    }
  }

 private:
  template <typename Layer>
  static void init_if_absent(ParamStore& store, Rng& rng, const Layer& layer) {
    const auto names = layer.param_names();
    const bool present = store.has(names.front());
    if (present) return;
    layer.init(store, rng);
  }

  static Vec mean(const std::vector<Vec>& xs) {
    // Same accumulation as attention pooling with uniform weights.
    const double w = 1.0 / static_cast<double>(xs.size());
    Vec m(xs.front().size(), 0.0);
    for (const auto& x : xs) axpy(w, x, m);
    return m;
  }

  static std::vector<Vec> mean_backward(std::span<const double> d, std::size_t n) {
    const double w = 1.0 / static_cast<double>(n);
    Vec share(d.begin(), d.end());
    for (double& v : share) v *= w;
    return std::vector<Vec>(n, share);
  }

  EncoderSpec spec_;
  std::size_t embed_dim_;
  SequenceEncoder word_enc_;
  SequenceEncoder sent_enc_;
  AttentionPool word_att_;
  AttentionPool sent_att_;
};

}  // namespace gile
