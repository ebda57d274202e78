#pragma once
// A full classifier view: embedding table, document encoder and output layer,
// with parameter names resolved through GroupPrefixes so several language
// views can share one ParamStore.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gile/corpus.hpp"
#include "gile/embed.hpp"
#include "gile/encoders.hpp"
#include "gile/numkit.hpp"
#include "gile/outlayers.hpp"

namespace gile {

struct ModelSpec {
  EncoderSpec encoder;
  OutputLayerSpec output;
  std::size_t embed_dim = 100;
  bool train_embeddings = true;
  double embed_init_scale = 0.1;
};

class Model {
 public:
  struct Pass {
    DocumentEncoder::Trace encoder;
    OutputLayer::Trace output;
    std::vector<std::size_t> candidates;
  };

  /// `output.joint_dim` must already be resolved when kind == gile and the
  /// caller wants a specific capacity; 0 falls back to single-language
  /// capacity matching.
  Model(const ModelSpec& spec, std::size_t vocab_size, const LabelCatalog& catalog,
        std::vector<std::vector<std::size_t>> descriptions, const GroupPrefixes& prefixes = {})
      : spec_(spec),
        vocab_size_(vocab_size),
        descriptions_(std::move(descriptions)),
        embed_name_(prefixes.embeddings + ".E"),
        encoder_(spec.encoder, spec.embed_dim, prefixes),
        output_(spec.output, spec.embed_dim, encoder_.output_dim(), catalog.seen_indices().size(), prefixes) {
    if (spec.embed_dim == 0) throw ConfigError("embed_dim must be > 0");
    if (descriptions_.size() != catalog.size()) throw DimensionError("descriptions/catalog size mismatch");
    columns_.assign(catalog.size(), kNoColumn);
    std::size_t col = 0;
    for (std::size_t i = 0; i < catalog.size(); ++i)
      if (catalog[i].seen) columns_[i] = col++;
    seen_ = catalog.seen_indices();
    unseen_ = catalog.unseen_indices();
    for (const auto& d : descriptions_)
      if (d.empty()) throw ConfigError("label with empty description");
  }

  const ModelSpec& spec() const { return spec_; }
  const DocumentEncoder& encoder() const { return encoder_; }
  const OutputLayer& output() const { return output_; }
  const std::string& embedding_name() const { return embed_name_; }
  const std::vector<std::size_t>& seen_labels() const { return seen_; }
  const std::vector<std::size_t>& unseen_labels() const { return unseen_; }
  const std::vector<std::vector<std::size_t>>& descriptions() const { return descriptions_; }
  std::size_t label_count() const { return descriptions_.size(); }
  bool supports_unseen() const { return output_.supports_unseen(); }

  std::vector<std::string> param_names() const {
    std::vector<std::string> out{embed_name_};
    for (auto& n : encoder_.param_names()) out.push_back(n);
    for (auto& n : output_.param_names()) out.push_back(n);
    return out;
  }

  void init(ParamStore& store, Rng& rng) const {
    if (!store.has(embed_name_)) {
      store.add(embed_name_, scaled_normal(vocab_size_, spec_.embed_dim, spec_.embed_init_scale, rng),
                spec_.train_embeddings);
    }
    encoder_.init(store, rng);
    output_.init(store, rng);
  }

  /// Caches the label embedding when E is frozen. Call after loading
  /// pretrained vectors and before scoring.
  void prepare(const ParamStore& store) {
    frozen_labels_.reset();
    if (!store.trainable(embed_name_)) frozen_labels_ = encode_all_labels(descriptions_, store.value(embed_name_));
  }

  Mat label_rows(const ParamStore& store, std::span<const std::size_t> candidates) const {
    if (frozen_labels_) {
      Mat out(candidates.size(), spec_.embed_dim);
      for (std::size_t r = 0; r < candidates.size(); ++r) {
        auto src = frozen_labels_->row(candidates[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
      }
      return out;
    }
    return encode_labels(descriptions_, candidates, store.value(embed_name_));
  }

  /// Linear-unit output columns for the candidates; unseen labels have none.
  std::vector<std::size_t> columns_for(std::span<const std::size_t> candidates) const {
    std::vector<std::size_t> cols;
    if (spec_.output.kind != OutputKind::linear) return cols;
    cols.reserve(candidates.size());
    for (auto c : candidates) {
      if (c >= columns_.size()) throw DimensionError("label index out of range");
      if (columns_[c] == kNoColumn) {
        throw UnsupportedError("linear output layer has no parameters for unseen label index " + std::to_string(c));
      }
      cols.push_back(columns_[c]);
    }
    return cols;
  }

  Vec encode(const ParamStore& store, const IndexedDocument& doc, DocumentEncoder::Trace* trace = nullptr) const {
    return encoder_.forward(store, store.value(embed_name_), doc, trace);
  }

  Vec forward(const ParamStore& store, const IndexedDocument& doc, std::span<const std::size_t> candidates,
              Pass* pass = nullptr) const {
    const auto cols = columns_for(candidates);
    const Vec h = encode(store, doc, pass ? &pass->encoder : nullptr);
    const Mat rows = output_.uses_label_embeddings() ? label_rows(store, candidates) : Mat();
    if (pass) pass->candidates.assign(candidates.begin(), candidates.end());
    return output_.forward(store, h, rows, cols, pass ? &pass->output : nullptr);
  }

  void backward(const ParamStore& store, const IndexedDocument& doc, const Pass& pass,
                std::span<const double> d_scores, Grads& grads) const {
    Mat* d_table = grads.has(embed_name_) ? &grads.at(embed_name_) : nullptr;
    Vec d_h(encoder_.output_dim(), 0.0);
    const bool label_grads = d_table && output_.uses_label_embeddings() && !frozen_labels_;
    Mat d_labels;
    if (label_grads) d_labels = Mat(pass.candidates.size(), spec_.embed_dim);
    output_.backward(store, pass.output, d_scores, grads, d_h, label_grads ? &d_labels : nullptr);
    if (label_grads) backprop_labels(descriptions_, pass.candidates, d_labels, *d_table);
    encoder_.backward(store, doc, pass.encoder, d_h, grads, d_table);
  }

 private:
  static constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

  ModelSpec spec_;
  std::size_t vocab_size_;
  std::vector<std::vector<std::size_t>> descriptions_;
  std::string embed_name_;
  DocumentEncoder encoder_;
  OutputLayer output_;
  std::vector<std::size_t> columns_;
  std::vector<std::size_t> seen_;
  std::vector<std::size_t> unseen_;
  std::optional<Mat> frozen_labels_;
};

}  // namespace gile
