#pragma once
// Synthetic compositional-label corpus.
//
// Each topic owns a private word list. A label is a combination of topics and
// its description is made of the leading words of those topics, so unseen
// labels share description words with seen ones. Documents draw most tokens
// from the topic lists of their positive labels and the rest from a separate
// background vocabulary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gile/corpus.hpp"
#include "gile/numkit.hpp"

namespace gile {

struct SynthConfig {
  std::size_t topics = 12;
  std::size_t words_per_topic = 20;
  std::size_t description_words_per_topic = 2;
  std::size_t topics_per_label = 2;
  std::size_t labels = 40;
  std::size_t docs_per_label = 200;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 5;
  std::size_t min_words = 5;
  std::size_t max_words = 12;
  double noise_fraction = 0.3;
  std::size_t noise_words = 200;
  double second_label_prob = 0.3;
  double unseen_fraction = 0.25;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::vector<std::string> languages{"en"};
  std::uint64_t seed = 1;

  void validate() const {
    if (topics == 0) throw ConfigError("synth: topics must be > 0");
    if (words_per_topic == 0) throw ConfigError("synth: words_per_topic must be > 0");
    if (description_words_per_topic == 0 || description_words_per_topic > words_per_topic)
      throw ConfigError("synth: description_words_per_topic must be in [1, words_per_topic]");
    if (topics_per_label == 0 || topics_per_label > topics)
      throw ConfigError("synth: topics_per_label must be in [1, topics]");
    if (labels == 0) throw ConfigError("synth: labels must be > 0");
    if (docs_per_label == 0) throw ConfigError("synth: docs_per_label must be > 0");
    if (min_sentences == 0 || min_sentences > max_sentences)
      throw ConfigError("synth: need 1 <= min_sentences <= max_sentences");
    if (min_words == 0 || min_words > max_words) throw ConfigError("synth: need 1 <= min_words <= max_words");
    if (noise_fraction < 0.0 || noise_fraction >= 0.5) throw ConfigError("synth: noise_fraction must be in [0, 0.5)");
    if (noise_fraction > 0.0 && noise_words == 0) throw ConfigError("synth: noise_words must be > 0");
    if (second_label_prob < 0.0 || second_label_prob > 1.0) throw ConfigError("synth: second_label_prob in [0,1]");
    if (unseen_fraction < 0.0 || unseen_fraction >= 1.0) throw ConfigError("synth: unseen_fraction must be in [0, 1)");
    if (valid_fraction < 0.0 || test_fraction < 0.0 || valid_fraction + test_fraction >= 1.0)
      throw ConfigError("synth: valid_fraction + test_fraction must be < 1");
    if (languages.empty()) throw ConfigError("synth: at least one language");
  }
};

/// Token provenance counted while generating one document.
struct Provenance {
  std::size_t topic_tokens = 0;
  std::size_t noise_tokens = 0;
};

struct SynthCorpus {
  Corpus corpus;  // all documents, catalog with seen flags
  std::vector<Document> train;
  std::vector<Document> valid;
  std::vector<Document> test;
  std::map<std::string, Provenance> provenance;  // by document id
  std::vector<std::vector<std::string>> topic_words;
};

namespace detail {

inline std::string padded(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

inline void combinations(std::size_t n, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
                         std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    combinations(n, k, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace detail

inline std::string synth_topic_word(std::size_t topic, std::size_t word) {
  return detail::padded("t", topic, 2) + detail::padded("w", word, 2);
}

inline SynthCorpus synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  SynthCorpus out;
  out.topic_words.resize(cfg.topics);
  for (std::size_t t = 0; t < cfg.topics; ++t)
    for (std::size_t w = 0; w < cfg.words_per_topic; ++w) out.topic_words[t].push_back(synth_topic_word(t, w));

  std::vector<std::vector<std::size_t>> combos;
  std::vector<std::size_t> cur;
  detail::combinations(cfg.topics, cfg.topics_per_label, 0, cur, combos);
  if (combos.size() < cfg.labels) {
    throw ConfigError("synth: only " + std::to_string(combos.size()) + " topic combinations for " +
                      std::to_string(cfg.labels) + " labels");
  }
  rng.shuffle(combos);
  combos.resize(cfg.labels);

  // Unseen labels are chosen so that every topic used by any label still
  // appears in at least one seen label.
  const auto n_unseen = static_cast<std::size_t>(std::llround(cfg.unseen_fraction * static_cast<double>(cfg.labels)));
  if (n_unseen >= cfg.labels) throw ConfigError("synth: unseen fraction leaves no seen labels");
  std::vector<std::size_t> topic_cover(cfg.topics, 0);
  for (const auto& c : combos)
    for (auto t : c) ++topic_cover[t];
  std::vector<std::size_t> order(cfg.labels);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<bool> unseen(cfg.labels, false);
  std::size_t marked = 0;
  for (auto l : order) {
    if (marked == n_unseen) break;
    bool ok = std::all_of(combos[l].begin(), combos[l].end(), [&](std::size_t t) { return topic_cover[t] > 1; });
    if (!ok) continue;
    for (auto t : combos[l]) --topic_cover[t];
    unseen[l] = true;
    ++marked;
  }
  if (marked != n_unseen) throw ConfigError("synth: cannot mark enough unseen labels while keeping topics covered");

  LabelCatalog catalog;
  for (std::size_t l = 0; l < cfg.labels; ++l) {
    LabelEntry e;
    e.id = detail::padded("L", l, 3);
    for (auto t : combos[l])
      for (std::size_t w = 0; w < cfg.description_words_per_topic; ++w) e.description.push_back(out.topic_words[t][w]);
    e.seen = !unseen[l];
    catalog.add(std::move(e));
  }

  const auto range = [&](std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); };

  std::vector<Document> all;
  std::size_t doc_index = 0;
  for (std::size_t l = 0; l < cfg.labels; ++l) {
    for (std::size_t n = 0; n < cfg.docs_per_label; ++n, ++doc_index) {
      Document d;
      d.id = detail::padded("d", doc_index, 6);
      d.lang = cfg.languages[doc_index % cfg.languages.size()];
      std::vector<std::size_t> positives{l};
      if (cfg.labels > 1 && rng.uniform() < cfg.second_label_prob) {
        std::size_t other = rng.index(cfg.labels - 1);
        if (other >= l) ++other;
        positives.push_back(other);
      }
      std::sort(positives.begin(), positives.end());
      for (auto p : positives) d.labels.push_back(catalog[p].id);

      std::vector<std::size_t> lengths(range(cfg.min_sentences, cfg.max_sentences));
      std::size_t total = 0;
      for (auto& len : lengths) total += (len = range(cfg.min_words, cfg.max_words));
      // Exactly floor(noise_fraction * total) background tokens, at random positions.
      const auto n_noise = static_cast<std::size_t>(std::floor(cfg.noise_fraction * static_cast<double>(total)));
      std::vector<bool> is_noise(total, false);
      std::fill(is_noise.begin(), is_noise.begin() + static_cast<std::ptrdiff_t>(n_noise), true);
      rng.shuffle(is_noise);

      Provenance prov;
      std::size_t pos = 0;
      for (auto len : lengths) {
        std::vector<std::string> sentence;
        for (std::size_t w = 0; w < len; ++w, ++pos) {
          if (is_noise[pos]) {
            sentence.push_back(detail::padded("n", rng.index(cfg.noise_words), 4));
            ++prov.noise_tokens;
          } else {
            const auto& topics = combos[positives[rng.index(positives.size())]];
            const auto t = topics[rng.index(topics.size())];
            sentence.push_back(out.topic_words[t][rng.index(cfg.words_per_topic)]);
            ++prov.topic_tokens;
          }
        }
        d.sentences.push_back(std::move(sentence));
      }
      out.provenance.emplace(d.id, prov);
      all.push_back(std::move(d));
    }
  }

  // Documents touching an unseen label go to evaluation splits only, so no
  // unseen label ever appears in training supervision.
  const double eval_total = cfg.valid_fraction + cfg.test_fraction;
  for (const auto& d : all) {
    const bool touches_unseen = std::any_of(d.labels.begin(), d.labels.end(),
                                            [&](const std::string& id) { return !catalog[catalog.index_of(id)].seen; });
    const double u = rng.uniform();
    if (touches_unseen) {
      const bool to_valid = eval_total > 0.0 && u < cfg.valid_fraction / eval_total;
      (to_valid ? out.valid : out.test).push_back(d);
    } else if (u < cfg.valid_fraction) {
      out.valid.push_back(d);
    } else if (u < eval_total) {
      out.test.push_back(d);
    } else {
      out.train.push_back(d);
    }
  }
  out.corpus.documents = std::move(all);
  out.corpus.labels = std::move(catalog);
  return out;
}

}  // namespace gile
