#pragma once
// Output layers: the per-label linear unit, the bilinear input-label unit and
// its two non-linear variants, and the generalized input-label embedding
// (GILE) with its label-set-size independent classification unit.
//
// All scorers return pre-sigmoid scores so ranking metrics and the
// probability path share one forward pass.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gile/encoders.hpp"
#include "gile/numkit.hpp"

namespace gile {

enum class OutputKind { linear, bilinear, gile, gile_label_only, gile_input_only, gile_constrained };
enum class BilinearVariant { plain, label_nonlin, input_nonlin };

inline std::string to_string(OutputKind k) {
  switch (k) {
    case OutputKind::linear: return "linear";
    case OutputKind::bilinear: return "bilinear";
    case OutputKind::gile: return "gile";
    case OutputKind::gile_label_only: return "gile-label-only";
    case OutputKind::gile_input_only: return "gile-input-only";
    case OutputKind::gile_constrained: return "gile-constrained";
  }
  return "?";
}

inline OutputKind parse_output_kind(const std::string& s) {
  if (s == "linear") return OutputKind::linear;
  if (s == "bilinear") return OutputKind::bilinear;
  if (s == "gile") return OutputKind::gile;
  if (s == "gile-label-only") return OutputKind::gile_label_only;
  if (s == "gile-input-only") return OutputKind::gile_input_only;
  if (s == "gile-constrained") return OutputKind::gile_constrained;
  throw ConfigError("unknown output layer kind '" + s + "'");
}

inline std::string to_string(BilinearVariant v) {
  switch (v) {
    case BilinearVariant::plain: return "plain";
    case BilinearVariant::label_nonlin: return "label-nonlin";
    case BilinearVariant::input_nonlin: return "input-nonlin";
  }
  return "?";
}

inline BilinearVariant parse_bilinear_variant(const std::string& s) {
  if (s == "plain") return BilinearVariant::plain;
  if (s == "label-nonlin") return BilinearVariant::label_nonlin;
  if (s == "input-nonlin") return BilinearVariant::input_nonlin;
  throw ConfigError("unknown bilinear variant '" + s + "'");
}

struct OutputLayerSpec {
  OutputKind kind = OutputKind::gile;
  std::size_t joint_dim = 0;  // d_j; 0 means "derive" (capacity match or constraint)
  Activation activation = Activation::relu;
  BilinearVariant bilinear_variant = BilinearVariant::plain;
  bool tied_embeddings = false;  // linear only: scores use label embeddings in place of W
};

struct OutputDims {
  std::size_t d = 0;    // label embedding dim
  std::size_t d_h = 0;  // document vector dim
  std::size_t d_j = 0;  // joint dim
  std::size_t k = 0;    // seen label count (linear only)
};

/// Joint dimension giving GILE roughly the linear unit's parameter count.
inline std::size_t capacity_match(std::size_t d_h, std::size_t d, std::span<const std::size_t> label_counts) {
  if (d_h == 0 || d == 0) throw ConfigError("capacity_match: dims must be positive");
  std::size_t k = 0;
  for (auto n : label_counts) k += n;
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(d_h) * static_cast<double>(k) / static_cast<double>(d_h + d)));
}

inline std::size_t capacity_match(std::size_t d_h, std::size_t d, std::size_t k) {
  const std::size_t ks[] = {k};
  return capacity_match(d_h, d, ks);
}

/// Joint dim actually used by `kind`: constrained variants pin it.
inline std::size_t resolve_joint_dim(const OutputLayerSpec& spec, std::size_t d, std::size_t d_h,
                                     std::size_t k) {
  auto pinned = [&](std::size_t want, const char* what) {
    if (spec.joint_dim != 0 && spec.joint_dim != want) {
      throw ConfigError(to_string(spec.kind) + " requires d_j = " + what + " = " + std::to_string(want) +
                        ", got " + std::to_string(spec.joint_dim));
    }
    return want;
  };
  switch (spec.kind) {
    case OutputKind::linear:
    case OutputKind::bilinear: return 0;
    case OutputKind::gile_label_only: return pinned(d_h, "d_h");
    case OutputKind::gile_input_only: return pinned(d, "d");
    case OutputKind::gile_constrained: return pinned(d, "d");
    case OutputKind::gile: {
      const std::size_t dj = spec.joint_dim != 0 ? spec.joint_dim : capacity_match(d_h, d, k);
      if (dj == 0) throw ConfigError("gile: joint dim resolved to 0");
      return dj;
    }
  }
  return 0;
}

inline std::size_t param_count(const OutputLayerSpec& spec, const OutputDims& dims) {
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("param_count: " + msg);
  };
  switch (spec.kind) {
    case OutputKind::linear:
      return spec.tied_embeddings ? dims.k : dims.k * (dims.d_h + 1);
    case OutputKind::bilinear:
      return dims.d * dims.d_h;
    case OutputKind::gile_constrained:
      need(dims.d_j == dims.d, "gile-constrained requires d_j == d");
      return dims.d_j * (dims.d + dims.d_h + 3) + 1;
    case OutputKind::gile:
      return dims.d_j * (dims.d + dims.d_h + 3) + 1;
    case OutputKind::gile_label_only:
      need(dims.d_j == dims.d_h, "gile-label-only requires d_j == d_h");
      return dims.d * dims.d_j + dims.d_j;
    case OutputKind::gile_input_only:
      need(dims.d_j == dims.d, "gile-input-only requires d_j == d");
      return dims.d_j * dims.d_h + dims.d_j;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Stateless scorers over explicit parameters.

struct LinearParams {
  Mat W;  // d_h x k
  Mat b;  // k x 1
};

struct BilinearParams {
  Mat W;  // d x d_h
};

struct GileParams {
  Mat U;   // d x d_j
  Mat bu;  // d_j x 1
  Mat V;   // d_j x d_h
  Mat bv;  // d_j x 1
  Mat w;   // d_j x 1
  double b = 0.0;
};

inline Vec score_linear(std::span<const double> h, const LinearParams& p) {
  if (p.W.rows() != h.size() || p.b.size() != p.W.cols()) {
    throw DimensionError("score_linear: W " + p.W.shape_str() + ", b " + p.b.shape_str() + ", h dim " +
                         std::to_string(h.size()));
  }
  Vec s(p.W.cols(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) axpy(h[i], p.W.row(i), s);
  axpy(1.0, p.b.data(), s);
  return s;
}

inline Vec score_bilinear(std::span<const double> h, const Mat& labels, const BilinearParams& p,
                          BilinearVariant variant, Activation act = Activation::relu) {
  if (p.W.rows() != labels.cols() || p.W.cols() != h.size()) {
    throw DimensionError("score_bilinear: labels " + labels.shape_str() + ", W " + p.W.shape_str() + ", h dim " +
                         std::to_string(h.size()));
  }
  Vec s(labels.rows(), 0.0);
  switch (variant) {
    case BilinearVariant::plain: {
      const Vec g = matvec(p.W, h);
      for (std::size_t c = 0; c < labels.rows(); ++c) s[c] = dot(labels.row(c), g);
      break;
    }
    case BilinearVariant::label_nonlin: {
      const Mat a = apply_nonlinearity(matmul(labels, p.W), act);
      for (std::size_t c = 0; c < labels.rows(); ++c) s[c] = dot(a.row(c), h);
      break;
    }
    case BilinearVariant::input_nonlin: {
      const Vec g = apply_nonlinearity(matvec(p.W, h), act);
      for (std::size_t c = 0; c < labels.rows(); ++c) s[c] = dot(labels.row(c), g);
      break;
    }
  }
  return s;
}

/// e' = act(e U + b_u), row-vector convention.
inline Vec gile_project_label(std::span<const double> e, const GileParams& p, Activation act = Activation::relu) {
  if (p.U.rows() != e.size() || p.bu.size() != p.U.cols()) {
    throw DimensionError("gile_project_label: U " + p.U.shape_str() + ", e dim " + std::to_string(e.size()));
  }
  Vec out(p.bu.data().begin(), p.bu.data().end());
  for (std::size_t i = 0; i < e.size(); ++i) axpy(e[i], p.U.row(i), out);
  apply_inplace(out, act);
  return out;
}

/// h' = act(V h + b_v), column-vector convention.
inline Vec gile_project_input(std::span<const double> h, const GileParams& p, Activation act = Activation::relu) {
  if (p.V.cols() != h.size() || p.bv.size() != p.V.rows()) {
    throw DimensionError("gile_project_input: V " + p.V.shape_str() + ", h dim " + std::to_string(h.size()));
  }
  Vec out = matvec(p.V, h);
  axpy(1.0, p.bv.data(), out);
  apply_inplace(out, act);
  return out;
}

/// score_j = (h' * e'_j) . w + b for every row e_j of `labels`.
inline Vec gile_score(std::span<const double> h, const Mat& labels, const GileParams& p,
                      Activation act = Activation::relu) {
  if (p.w.size() != p.U.cols() || p.V.rows() != p.U.cols()) {
    throw DimensionError("gile_score: inconsistent joint dims U " + p.U.shape_str() + ", V " + p.V.shape_str() +
                         ", w " + p.w.shape_str());
  }
  const Vec hp = gile_project_input(h, p, act);
  Vec hw(hp.size());
  for (std::size_t m = 0; m < hp.size(); ++m) hw[m] = hp[m] * p.w.data()[m];
  Vec s(labels.rows());
  for (std::size_t j = 0; j < labels.rows(); ++j) s[j] = dot(gile_project_label(labels.row(j), p, act), hw) + p.b;
  return s;
}

inline Vec predict_proba(std::span<const double> scores) {
  Vec p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = sigmoid(scores[i]);
  return p;
}

/// GILE with identity projections, zero biases, unit w and b = 0 against the
/// bilinear form labels * V * h.
inline std::pair<Vec, Vec> degenerate_check(const Mat& labels, const Mat& V, std::span<const double> h) {
  if (V.rows() != labels.cols()) {
    throw DimensionError("degenerate_check: V " + V.shape_str() + " vs labels " + labels.shape_str());
  }
  GileParams p;
  p.U = Mat::identity(labels.cols());
  p.bu = Mat(labels.cols(), 1);
  p.V = V;
  p.bv = Mat(V.rows(), 1);
  p.w = Mat(V.rows(), 1, 1.0);
  p.b = 0.0;
  Vec gile = gile_score(h, labels, p, Activation::identity);
  Vec bil = score_bilinear(h, labels, BilinearParams{V}, BilinearVariant::plain);
  return {std::move(gile), std::move(bil)};
}

// ---------------------------------------------------------------------------
// Trainable layer over the parameter store.

class OutputLayer {
 public:
  struct Trace {
    Vec h;
    Mat labels;       // candidate label rows
    Mat label_proj;   // act(labels U + b_u) or act(labels W)
    Vec input_proj;   // act(V h + b_v), W h or act(W h)
    std::vector<std::size_t> columns;
  };

  OutputLayer(const OutputLayerSpec& spec, std::size_t d, std::size_t d_h, std::size_t k,
              const GroupPrefixes& prefixes)
      : spec_(spec), d_(d), d_h_(d_h), k_(k), joint_(prefixes.joint), cls_(prefixes.classifier) {
    d_j_ = resolve_joint_dim(spec, d, d_h, k);
    if (spec.kind == OutputKind::linear && k == 0) throw ConfigError("linear output layer needs k > 0");
    if (spec.kind == OutputKind::linear && spec.tied_embeddings && d != d_h) {
      throw ConfigError("tied linear unit requires d == d_h");
    }
  }

  const OutputLayerSpec& spec() const { return spec_; }
  std::size_t joint_dim() const { return d_j_; }
  OutputDims dims() const { return {d_, d_h_, d_j_, k_}; }
  bool supports_unseen() const { return spec_.kind != OutputKind::linear; }
  bool uses_label_embeddings() const { return spec_.kind != OutputKind::linear || spec_.tied_embeddings; }

  std::vector<std::string> param_names() const {
    switch (spec_.kind) {
      case OutputKind::linear:
        if (spec_.tied_embeddings) return {cls_ + ".b"};
        return {cls_ + ".W", cls_ + ".b"};
      case OutputKind::bilinear: return {joint_ + ".W"};
      case OutputKind::gile:
      case OutputKind::gile_constrained:
        return {joint_ + ".U", joint_ + ".bu", joint_ + ".V", joint_ + ".bv", cls_ + ".w", cls_ + ".b"};
      case OutputKind::gile_label_only: return {joint_ + ".U", joint_ + ".bu"};
      case OutputKind::gile_input_only: return {joint_ + ".V", joint_ + ".bv"};
    }
    return {};
  }

  void init(ParamStore& store, Rng& rng) const {
    auto add = [&](const std::string& name, Mat m) {
      if (!store.has(name)) store.add(name, std::move(m));
    };
    switch (spec_.kind) {
      case OutputKind::linear:
        if (!spec_.tied_embeddings) add(cls_ + ".W", glorot_uniform(d_h_, k_, rng));
        add(cls_ + ".b", Mat(k_, 1));
        break;
      case OutputKind::bilinear: add(joint_ + ".W", glorot_uniform(d_, d_h_, rng)); break;
      case OutputKind::gile:
      case OutputKind::gile_constrained:
        add(joint_ + ".U", glorot_uniform(d_, d_j_, rng));
        add(joint_ + ".bu", Mat(d_j_, 1));
        add(joint_ + ".V", glorot_uniform(d_j_, d_h_, rng));
        add(joint_ + ".bv", Mat(d_j_, 1));
        add(cls_ + ".w", glorot_uniform(d_j_, 1, rng));
        add(cls_ + ".b", Mat(1, 1));
        break;
      case OutputKind::gile_label_only:
        add(joint_ + ".U", glorot_uniform(d_, d_j_, rng));
        add(joint_ + ".bu", Mat(d_j_, 1));
        break;
      case OutputKind::gile_input_only:
        add(joint_ + ".V", glorot_uniform(d_j_, d_h_, rng));
        add(joint_ + ".bv", Mat(d_j_, 1));
        break;
    }
  }

  /// `labels` holds the candidate label embedding rows; `columns` the linear
  /// unit's output columns for the same candidates (ignored by other kinds).
  Vec forward(const ParamStore& store, std::span<const double> h, const Mat& labels,
              std::span<const std::size_t> columns, Trace* trace) const {
    if (h.size() != d_h_) throw DimensionError("output layer: h dim " + std::to_string(h.size()));
    if (uses_label_embeddings() && labels.cols() != d_) {
      throw DimensionError("output layer: label rows " + labels.shape_str() + ", expected d = " + std::to_string(d_));
    }
    const Activation act = spec_.activation;
    const std::size_t C = spec_.kind == OutputKind::linear ? columns.size() : labels.rows();
    Vec s(C, 0.0);
    Mat label_proj;
    Vec input_proj;
    switch (spec_.kind) {
      case OutputKind::linear: {
        const Mat& b = store.value(cls_ + ".b");
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t col = columns[c];
          if (col >= k_) throw DimensionError("linear unit: column " + std::to_string(col) + " >= k");
          if (spec_.tied_embeddings) {
            s[c] = dot(labels.row(c), h);
          } else {
            const Mat& w = store.value(cls_ + ".W");
            double acc = 0.0;
            for (std::size_t i = 0; i < d_h_; ++i) acc += w(i, col) * h[i];
            s[c] = acc;
          }
          s[c] += b.data()[col];
        }
        break;
      }
      case OutputKind::bilinear: {
        const Mat& w = store.value(joint_ + ".W");
        if (spec_.bilinear_variant == BilinearVariant::label_nonlin) {
          label_proj = apply_nonlinearity(matmul(labels, w), act);
          for (std::size_t c = 0; c < C; ++c) s[c] = dot(label_proj.row(c), h);
        } else {
          input_proj = matvec(w, h);
          if (spec_.bilinear_variant == BilinearVariant::input_nonlin) apply_inplace(input_proj, act);
          for (std::size_t c = 0; c < C; ++c) s[c] = dot(labels.row(c), input_proj);
        }
        break;
      }
      case OutputKind::gile:
      case OutputKind::gile_constrained: {
        label_proj = project_labels(store, labels);
        input_proj = project_input(store, h);
        const auto w = store.value(cls_ + ".w").data();
        const double b = store.value(cls_ + ".b").data()[0];
        Vec hw(d_j_);
        for (std::size_t m = 0; m < d_j_; ++m) hw[m] = input_proj[m] * w[m];
        for (std::size_t c = 0; c < C; ++c) s[c] = dot(label_proj.row(c), hw) + b;
        break;
      }
      case OutputKind::gile_label_only: {
        label_proj = project_labels(store, labels);
        for (std::size_t c = 0; c < C; ++c) s[c] = dot(label_proj.row(c), h);
        break;
      }
      case OutputKind::gile_input_only: {
        input_proj = project_input(store, h);
        for (std::size_t c = 0; c < C; ++c) s[c] = dot(labels.row(c), input_proj);
        break;
      }
    }
    if (trace) {
      trace->h.assign(h.begin(), h.end());
      trace->labels = labels;
      trace->label_proj = std::move(label_proj);
      trace->input_proj = std::move(input_proj);
      trace->columns.assign(columns.begin(), columns.end());
    }
    return s;
  }

  /// Accumulates parameter gradients, adds dL/dh into d_h and, when
  /// non-null, dL/d(label rows) into d_labels (same shape as trace.labels).
  void backward(const ParamStore& store, const Trace& tr, std::span<const double> d_scores, Grads& grads,
                std::span<double> d_h, Mat* d_labels) const {
    const Activation act = spec_.activation;
    const std::size_t C = d_scores.size();
    switch (spec_.kind) {
      case OutputKind::linear: {
        Mat* gb = detail::grad_or_null(grads, cls_ + ".b");
        for (std::size_t c = 0; c < C; ++c) {
          const double ds = d_scores[c];
          const std::size_t col = tr.columns[c];
          if (gb) gb->data()[col] += ds;
          if (spec_.tied_embeddings) {
            axpy(ds, tr.labels.row(c), d_h);
            if (d_labels) axpy(ds, tr.h, d_labels->row(c));
          } else {
            const Mat& w = store.value(cls_ + ".W");
            Mat* gw = detail::grad_or_null(grads, cls_ + ".W");
            for (std::size_t i = 0; i < d_h_; ++i) {
              d_h[i] += ds * w(i, col);
              if (gw) (*gw)(i, col) += ds * tr.h[i];
            }
          }
        }
        break;
      }
      case OutputKind::bilinear: {
        const Mat& w = store.value(joint_ + ".W");
        Mat* gw = detail::grad_or_null(grads, joint_ + ".W");
        if (spec_.bilinear_variant == BilinearVariant::label_nonlin) {
          Mat d_pre(C, d_h_);
          for (std::size_t c = 0; c < C; ++c) {
            axpy(d_scores[c], tr.label_proj.row(c), d_h);
            auto a = tr.label_proj.row(c);
            for (std::size_t i = 0; i < d_h_; ++i) d_pre(c, i) = d_scores[c] * tr.h[i] * activation_grad(a[i], act);
          }
          if (gw) add_transposed_product(*gw, tr.labels, d_pre);
          if (d_labels) add_product_transposed(*d_labels, d_pre, w);
        } else {
          Vec dg(d_, 0.0);
          for (std::size_t c = 0; c < C; ++c) {
            axpy(d_scores[c], tr.labels.row(c), dg);
            if (d_labels) axpy(d_scores[c], tr.input_proj, d_labels->row(c));
          }
          if (spec_.bilinear_variant == BilinearVariant::input_nonlin)
            for (std::size_t i = 0; i < d_; ++i) dg[i] *= activation_grad(tr.input_proj[i], act);
          if (gw) add_outer(*gw, dg, tr.h);
          add_matvec_t(w, dg, d_h);
        }
        break;
      }
      case OutputKind::gile:
      case OutputKind::gile_constrained: {
        const auto w = store.value(cls_ + ".w").data();
        Mat* gw = detail::grad_or_null(grads, cls_ + ".w");
        Mat* gb = detail::grad_or_null(grads, cls_ + ".b");
        Vec d_input_proj(d_j_, 0.0);
        Mat d_label_proj(C, d_j_);
        double db = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double ds = d_scores[c];
          db += ds;
          auto e = tr.label_proj.row(c);
          auto dl = d_label_proj.row(c);
          for (std::size_t m = 0; m < d_j_; ++m) {
            if (gw) gw->data()[m] += ds * e[m] * tr.input_proj[m];
            dl[m] = ds * tr.input_proj[m] * w[m];
            d_input_proj[m] += ds * e[m] * w[m];
          }
        }
        if (gb) gb->data()[0] += db;
        backprop_label_proj(store, tr, d_label_proj, grads, d_labels);
        backprop_input_proj(store, tr, d_input_proj, grads, d_h);
        break;
      }
      case OutputKind::gile_label_only: {
        Mat d_label_proj(C, d_j_);
        for (std::size_t c = 0; c < C; ++c) {
          axpy(d_scores[c], tr.label_proj.row(c), d_h);
          axpy(d_scores[c], tr.h, d_label_proj.row(c));
        }
        backprop_label_proj(store, tr, d_label_proj, grads, d_labels);
        break;
      }
      case OutputKind::gile_input_only: {
        Vec d_input_proj(d_j_, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
          axpy(d_scores[c], tr.labels.row(c), d_input_proj);
          if (d_labels) axpy(d_scores[c], tr.input_proj, d_labels->row(c));
        }
        backprop_input_proj(store, tr, d_input_proj, grads, d_h);
        break;
      }
    }
  }

 private:
  Mat project_labels(const ParamStore& store, const Mat& labels) const {
    Mat a = matmul(labels, store.value(joint_ + ".U"));
    const auto bu = store.value(joint_ + ".bu").data();
    for (std::size_t c = 0; c < a.rows(); ++c) axpy(1.0, bu, a.row(c));
    apply_inplace(a.data(), spec_.activation);
    return a;
  }

  Vec project_input(const ParamStore& store, std::span<const double> h) const {
    Vec g = matvec(store.value(joint_ + ".V"), h);
    axpy(1.0, store.value(joint_ + ".bv").data(), g);
    apply_inplace(g, spec_.activation);
    return g;
  }

  void backprop_label_proj(const ParamStore& store, const Trace& tr, Mat& d_proj, Grads& grads, Mat* d_labels) const {
    for (std::size_t c = 0; c < d_proj.rows(); ++c) {
      auto a = tr.label_proj.row(c);
      auto d = d_proj.row(c);
      for (std::size_t m = 0; m < d_j_; ++m) d[m] *= activation_grad(a[m], spec_.activation);
    }
    if (Mat* gu = detail::grad_or_null(grads, joint_ + ".U")) add_transposed_product(*gu, tr.labels, d_proj);
    if (Mat* gbu = detail::grad_or_null(grads, joint_ + ".bu"))
      for (std::size_t c = 0; c < d_proj.rows(); ++c) axpy(1.0, d_proj.row(c), gbu->data());
    if (d_labels) add_product_transposed(*d_labels, d_proj, store.value(joint_ + ".U"));
  }

  void backprop_input_proj(const ParamStore& store, const Trace& tr, Vec& d_proj, Grads& grads,
                           std::span<double> d_h) const {
    for (std::size_t m = 0; m < d_proj.size(); ++m) d_proj[m] *= activation_grad(tr.input_proj[m], spec_.activation);
    if (Mat* gv = detail::grad_or_null(grads, joint_ + ".V")) add_outer(*gv, d_proj, tr.h);
    if (Mat* gbv = detail::grad_or_null(grads, joint_ + ".bv")) axpy(1.0, d_proj, gbv->data());
    add_matvec_t(store.value(joint_ + ".V"), d_proj, d_h);
  }

  // G += A^T B
  static void add_transposed_product(Mat& g, const Mat& a, const Mat& b) {
    for (std::size_t c = 0; c < a.rows(); ++c) add_outer(g, a.row(c), b.row(c));
  }

  // G += A B^T
  static void add_product_transposed(Mat& g, const Mat& a, const Mat& b) {
    for (std::size_t c = 0; c < a.rows(); ++c) {
      auto out = g.row(c);
      for (std::size_t i = 0; i < b.rows(); ++i) out[i] += dot(a.row(c), b.row(i));
    }
  }

  OutputLayerSpec spec_;
  std::size_t d_;
  std::size_t d_h_;
  std::size_t k_;
  std::size_t d_j_ = 0;
  std::string joint_;
  std::string cls_;
};

}  // namespace gile
