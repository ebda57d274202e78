#pragma once
// Multi-label ranking and classification metrics and the seen/unseen
// evaluation protocol.
//
// Ranking metrics use the standard multi-label definitions:
//   rank loss   fraction of (positive, negative) pairs with s_pos <= s_neg,
//               ties counting one half
//   avg prec    mean over positives of precision at that positive's rank
//   one-error   1 when the top-ranked label is not a positive
// Ranks sort by descending score; ties break by ascending label index.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gile/corpus.hpp"
#include "gile/numkit.hpp"

namespace gile {

using Gold = std::vector<std::uint8_t>;

/// Candidate positions in rank order.
inline std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline std::optional<double> rank_loss(std::span<const double> scores, std::span<const std::uint8_t> gold) {
  if (scores.size() != gold.size()) throw DimensionError("rank_loss: size mismatch");
  std::size_t pos = 0, neg = 0;
  for (auto g : gold) (g ? pos : neg)++;
  if (pos == 0 || neg == 0) return std::nullopt;
  double bad = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (!gold[p]) continue;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      if (gold[n]) continue;
      if (scores[p] < scores[n]) bad += 1.0;
      else if (scores[p] == scores[n]) bad += 0.5;
    }
  }
  return bad / static_cast<double>(pos * neg);
}

inline std::optional<double> avg_precision(std::span<const double> scores, std::span<const std::uint8_t> gold) {
  if (scores.size() != gold.size()) throw DimensionError("avg_precision: size mismatch");
  const auto order = rank_order(scores);
  std::size_t hits = 0;
  double acc = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (gold[order[r]]) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return acc / static_cast<double>(hits);
}

inline std::optional<double> one_error(std::span<const double> scores, std::span<const std::uint8_t> gold) {
  if (scores.size() != gold.size()) throw DimensionError("one_error: size mismatch");
  if (std::none_of(gold.begin(), gold.end(), [](auto g) { return g != 0; })) return std::nullopt;
  const auto order = rank_order(scores);
  return gold[order.front()] ? 0.0 : 1.0;
}

struct F1Counts {
  std::size_t tp = 0, fp = 0, fn = 0;

  void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gold) {
    if (pred.size() != gold.size()) throw DimensionError("micro_f1: shape mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] && gold[i]) ++tp;
      else if (pred[i]) ++fp;
      else if (gold[i]) ++fn;
    }
  }
  void add(const F1Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
  }
  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  /// Percent; 0 when precision + recall is 0.
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 100.0 * 2.0 * p * r / (p + r);
  }
};

/// Pooled F1 over every (document, label) cell, in percent.
inline double micro_f1(const std::vector<Gold>& predictions, const std::vector<Gold>& gold) {
  if (predictions.size() != gold.size()) throw DimensionError("micro_f1: row count mismatch");
  F1Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.add(predictions[i], gold[i]);
  return c.f1();
}

inline Gold threshold_predictions(std::span<const double> probs, double threshold) {
  Gold out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

enum class Scope { seen, unseen };

inline std::string to_string(Scope s) { return s == Scope::seen ? "seen" : "unseen"; }

struct EvalProtocol {
  Scope scope = Scope::seen;
  double threshold = 0.0;  // 0 = derive from the label-count policy
  bool low_resource = false;
  bool mixed_candidates = false;  // rank within all labels instead of the scope only
  std::size_t max_sentences = 30;
  std::size_t max_words = 30;

  /// 0.4 below 400 seen labels, 0.2 otherwise; 0.3 in the low-resource setting.
  static double policy_threshold(std::size_t seen_labels, bool low_resource) {
    if (low_resource) return 0.3;
    return seen_labels < 400 ? 0.4 : 0.2;
  }

  double resolved_threshold(std::size_t seen_labels) const {
    const double t = threshold > 0.0 ? threshold : policy_threshold(seen_labels, low_resource);
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("decision threshold must be in (0,1)");
    return t;
  }
};

struct LabelBreakdown {
  std::string id;
  std::size_t support = 0;
  F1Counts counts;
};

struct MetricsReport {
  Scope scope = Scope::seen;
  double rank_loss = 0.0;      // percent
  double avg_precision = 0.0;  // percent
  double one_error = 0.0;      // percent
  double micro_f1 = 0.0;       // percent
  std::size_t documents = 0;
  std::size_t ranked_documents = 0;       // had >= 1 positive in scope
  std::size_t rank_loss_documents = 0;    // had both positives and negatives
  std::size_t candidate_labels = 0;
  double threshold = 0.0;
  bool mixed_candidates = false;
  std::size_t max_sentences = 0;
  std::size_t max_words = 0;
  std::vector<LabelBreakdown> per_label;
};

/// Raw scores (logits) for document i over the given candidate catalog
/// indices; probabilities are their sigmoids.
using ScoreFn = std::function<Vec(std::size_t doc, std::span<const std::size_t> candidates)>;

/// `gold[i]` lists catalog indices of document i's labels.
inline MetricsReport evaluate_scores(const ScoreFn& score, const std::vector<std::vector<std::size_t>>& gold,
                                     const LabelCatalog& catalog, const EvalProtocol& protocol) {
  MetricsReport rep;
  rep.scope = protocol.scope;
  rep.threshold = protocol.resolved_threshold(catalog.seen_indices().size());
  rep.mixed_candidates = protocol.mixed_candidates;
  rep.max_sentences = protocol.max_sentences;
  rep.max_words = protocol.max_words;

  const auto scope_labels = protocol.scope == Scope::seen ? catalog.seen_indices() : catalog.unseen_indices();
  std::vector<std::size_t> candidates = scope_labels;
  if (protocol.mixed_candidates) {
    candidates.resize(catalog.size());
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  std::vector<bool> in_scope(catalog.size(), false);
  for (auto l : scope_labels) in_scope[l] = true;
  rep.candidate_labels = candidates.size();

  std::vector<std::size_t> position(catalog.size(), candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) position[candidates[i]] = i;
  rep.per_label.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) rep.per_label[i].id = catalog[candidates[i]].id;

  double rl = 0.0, ap = 0.0, oe = 0.0;
  F1Counts pooled;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    Gold g(candidates.size(), 0);
    for (auto l : gold[d])
      if (l < catalog.size() && in_scope[l] && position[l] < candidates.size()) g[position[l]] = 1;
    const Vec s = candidates.empty() ? Vec{} : score(d, candidates);
    if (s.size() != candidates.size()) throw DimensionError("evaluate: scorer returned wrong length");
    ++rep.documents;
    if (auto v = rank_loss(s, g)) {
      rl += *v;
      ++rep.rank_loss_documents;
    }
    if (auto v = avg_precision(s, g)) {
      ap += *v;
      oe += *one_error(s, g);
      ++rep.ranked_documents;
    }
    Vec probs(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) probs[i] = sigmoid(s[i]);
    const Gold pred = threshold_predictions(probs, rep.threshold);
    pooled.add(pred, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto& lb = rep.per_label[i];
      lb.support += g[i];
      lb.counts.add(std::span<const std::uint8_t>(&pred[i], 1), std::span<const std::uint8_t>(&g[i], 1));
    }
  }
  if (rep.rank_loss_documents) rep.rank_loss = 100.0 * rl / static_cast<double>(rep.rank_loss_documents);
  if (rep.ranked_documents) {
    rep.avg_precision = 100.0 * ap / static_cast<double>(rep.ranked_documents);
    rep.one_error = 100.0 * oe / static_cast<double>(rep.ranked_documents);
  }
  rep.micro_f1 = pooled.f1();
  return rep;
}

inline nlohmann::json to_json(const MetricsReport& r, bool with_labels = true) {
  nlohmann::json j{{"scope", to_string(r.scope)},
                   {"rank_loss", r.rank_loss},
                   {"avg_precision", r.avg_precision},
                   {"one_error", r.one_error},
                   {"micro_f1", r.micro_f1},
                   {"documents", r.documents},
                   {"ranked_documents", r.ranked_documents},
                   {"rank_loss_documents", r.rank_loss_documents},
                   {"candidate_labels", r.candidate_labels},
                   {"protocol",
                    {{"scope", to_string(r.scope)},
                     {"threshold", r.threshold},
                     {"mixed_candidates", r.mixed_candidates},
                     {"max_sentences", r.max_sentences},
                     {"max_words", r.max_words}}}};
  if (with_labels) {
    auto arr = nlohmann::json::array();
    for (const auto& l : r.per_label) {
      arr.push_back({{"id", l.id},
                     {"support", l.support},
                     {"tp", l.counts.tp},
                     {"fp", l.counts.fp},
                     {"fn", l.counts.fn},
                     {"f1", l.counts.f1()}});
    }
    j["per_label"] = std::move(arr);
  }
  return j;
}

inline std::string format_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(8) << "scope" << std::right << std::setw(9) << "RL" << std::setw(9) << "AvgPr"
     << std::setw(9) << "OneErr" << std::setw(9) << "F1" << std::setw(7) << "docs" << std::setw(8) << "labels"
     << std::setw(8) << "thresh" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(8) << to_string(r.scope) << std::right << std::setw(9) << r.rank_loss << std::setw(9)
       << r.avg_precision << std::setw(9) << r.one_error << std::setw(9) << r.micro_f1 << std::setw(7) << r.documents
       << std::setw(8) << r.candidate_labels << std::setw(8) << r.threshold << '\n';
  }
  if (!reports.empty()) {
    os << "protocol: truncation " << reports.front().max_sentences << " sentences x " << reports.front().max_words
       << " words, candidates " << (reports.front().mixed_candidates ? "all labels" : "scope only") << '\n';
  }
  return os.str();
}

}  // namespace gile
