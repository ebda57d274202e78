#pragma once
// Documents, label catalogs, vocabularies and their JSONL file formats.
//
// Document file: one JSON object per line
//   {"id": str, "lang": str, "sentences": [[str, ...], ...], "labels": [str, ...]}
// Label file: one JSON object per line
//   {"id": str, "description": str (whitespace-tokenized), "seen": bool}
// Split manifest: plain text, one document id per line.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gile/errors.hpp"

namespace gile {

struct Document {
  std::string id;
  std::string lang = "en";
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> labels;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
  friend bool operator==(const Document&, const Document&) = default;
};

struct LabelEntry {
  std::string id;
  std::vector<std::string> description;
  bool seen = true;
  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

class LabelCatalog {
 public:
  LabelCatalog() = default;
  explicit LabelCatalog(std::vector<LabelEntry> entries) {
    for (auto& e : entries) add(std::move(e));
  }

  void add(LabelEntry e) {
    if (e.id.empty()) throw ConfigError("label with empty id");
    if (e.description.empty()) throw ConfigError("label '" + e.id + "' has an empty description");
    if (index_.count(e.id)) throw ConfigError("duplicate label id '" + e.id + "'");
    index_.emplace(e.id, entries_.size());
    entries_.push_back(std::move(e));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const LabelEntry& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<LabelEntry>& entries() const noexcept { return entries_; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ReferenceError("unknown label id '" + id + "'");
    return it->second;
  }

  void set_seen(std::size_t i, bool seen) { entries_.at(i).seen = seen; }

  std::vector<std::size_t> seen_indices() const { return filter(true); }
  std::vector<std::size_t> unseen_indices() const { return filter(false); }

  friend bool operator==(const LabelCatalog& a, const LabelCatalog& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::size_t> filter(bool seen) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].seen == seen) out.push_back(i);
    return out;
  }

  std::vector<LabelEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::vector<std::string> split_whitespace(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Digits, optionally with a single decimal point.
inline bool is_number_token(const std::string& tok) {
  bool digit = false;
  int dots = 0;
  for (char c : tok) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c == '.') {
      if (++dots > 1) return false;
    } else {
      return false;
    }
  }
  return digit;
}

class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kNum = 1;
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kNumToken = "<num>";

  Vocabulary() : tokens_{kUnkToken, kNumToken} { reindex(); }

  /// Tokens beyond the two reserved slots, in index order.
  explicit Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
    for (const auto& t : tokens) {
      if (t == kUnkToken || t == kNumToken) continue;
      if (index_.count(t)) throw ConfigError("duplicate vocabulary token '" + t + "'");
      index_.emplace(t, tokens_.size());
      tokens_.push_back(t);
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(const std::string& tok) const { return index_.count(tok) != 0; }

  std::size_t index_of(const std::string& tok) const {
    if (is_number_token(tok)) return kNum;
    auto it = index_.find(tok);
    return it == index_.end() ? kUnk : it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Counts document and label-description tokens together so that labels and
/// documents share one embedding table. Kept tokens are sorted, which makes
/// the result independent of document order.
inline Vocabulary build_vocab(const std::vector<Document>& documents, const LabelCatalog& catalog,
                              std::size_t min_count) {
  if (min_count < 1) throw ConfigError("build_vocab: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  auto count = [&](const std::string& tok) {
    ++total;
    if (!is_number_token(tok)) ++counts[tok];
  };
  for (const auto& d : documents)
    for (const auto& s : d.sentences)
      for (const auto& t : s) count(t);
  for (const auto& l : catalog.entries())
    for (const auto& t : l.description) count(t);
  if (total == 0) throw ConfigError("build_vocab: empty corpus");
  std::vector<std::string> kept;
  for (const auto& [tok, n] : counts)
    if (n >= min_count) kept.push_back(tok);
  return Vocabulary(kept);
}

/// Marks `unseen_ids` as unseen and everything else as seen.
inline LabelCatalog split_seen_unseen(const LabelCatalog& catalog, const std::set<std::string>& unseen_ids) {
  for (const auto& id : unseen_ids) {
    if (!catalog.contains(id)) throw ReferenceError("split_seen_unseen: unknown label id '" + id + "'");
  }
  if (!catalog.empty() && unseen_ids.size() == catalog.size()) {
    throw ConfigError("split_seen_unseen: every label unseen leaves nothing to train on");
  }
  LabelCatalog out = catalog;
  for (std::size_t i = 0; i < out.size(); ++i) out.set_seen(i, unseen_ids.count(out[i].id) == 0);
  return out;
}

/// Drops unseen labels from supervision; documents left without labels are
/// excluded (they remain available for unseen-label evaluation).
inline std::vector<Document> training_documents(const std::vector<Document>& docs, const LabelCatalog& catalog) {
  std::vector<Document> out;
  for (const auto& d : docs) {
    Document t = d;
    t.labels.clear();
    for (const auto& id : d.labels)
      if (catalog[catalog.index_of(id)].seen) t.labels.push_back(id);
    if (!t.labels.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline Document truncate(const Document& doc, std::size_t max_sentences, std::size_t max_words) {
  if (max_sentences < 1 || max_words < 1) throw ConfigError("truncate: limits must be >= 1");
  Document out = doc;
  if (out.sentences.size() > max_sentences) out.sentences.resize(max_sentences);
  for (auto& s : out.sentences)
    if (s.size() > max_words) s.resize(max_words);
  return out;
}

/// Flattens all sentences into one pseudo-sentence (single-level encoders).
inline Document flatten_sentences(const Document& doc) {
  Document out = doc;
  std::vector<std::string> all;
  for (const auto& s : doc.sentences) all.insert(all.end(), s.begin(), s.end());
  out.sentences = {std::move(all)};
  return out;
}

// ---------------------------------------------------------------------------
// JSONL I/O

inline nlohmann::json to_json(const Document& d) {
  return nlohmann::json{{"id", d.id}, {"lang", d.lang}, {"sentences", d.sentences}, {"labels", d.labels}};
}

inline nlohmann::json to_json(const LabelEntry& l) {
  return nlohmann::json{{"id", l.id}, {"description", join(l.description)}, {"seen", l.seen}};
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing \"") + key + "\" field", line);
  return *it;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

inline Document parse_document(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw ParseError("record is not an object", line);
  Document d;
  try {
    d.id = detail::require(j, "id", line).get<std::string>();
    if (j.contains("lang")) d.lang = j.at("lang").get<std::string>();
    d.sentences = detail::require(j, "sentences", line).get<std::vector<std::vector<std::string>>>();
    if (j.contains("labels")) d.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field type: ") + e.what(), line);
  }
  d.sentences.erase(std::remove_if(d.sentences.begin(), d.sentences.end(),
                                   [](const auto& s) { return s.empty(); }),
                    d.sentences.end());
  if (d.sentences.empty()) throw ParseError("document '" + d.id + "' has no tokens", line);
  return d;
}

inline LabelCatalog load_labels(const std::string& path) {
  LabelCatalog catalog;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    const std::size_t line = i + 1;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    LabelEntry e;
    try {
      e.id = detail::require(j, "id", line).get<std::string>();
      e.description = split_whitespace(detail::require(j, "description", line).get<std::string>());
      if (j.contains("seen")) e.seen = j.at("seen").get<bool>();
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("bad field type: ") + ex.what(), line);
    }
    try {
      catalog.add(std::move(e));
    } catch (const ConfigError& ex) {
      throw ParseError(ex.what(), line);
    }
  }
  return catalog;
}

/// Every label reference is checked against `catalog`.
inline std::vector<Document> load_documents(const std::string& path, const LabelCatalog& catalog) {
  std::vector<Document> docs;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    Document d = parse_document(lines[i], i + 1);
    for (const auto& id : d.labels) {
      if (!catalog.contains(id)) {
        throw ReferenceError("line " + std::to_string(i + 1) + ": unknown label id '" + id + "'");
      }
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

struct Corpus {
  std::vector<Document> documents;
  LabelCatalog labels;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline Corpus load_corpus(const std::string& documents_path, const std::string& labels_path) {
  Corpus c;
  c.labels = load_labels(labels_path);
  c.documents = load_documents(documents_path, c.labels);
  return c;
}

inline void save_documents(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void save_labels(const std::string& path, const LabelCatalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& l : catalog.entries()) out << to_json(l).dump() << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void save_corpus(const std::string& documents_path, const std::string& labels_path, const Corpus& c) {
  save_labels(labels_path, c.labels);
  save_documents(documents_path, c.documents);
}

inline void save_manifest(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& d : docs) out << d.id << '\n';
}

inline std::vector<std::string> load_manifest(const std::string& path) {
  std::vector<std::string> ids;
  for (const auto& line : detail::read_lines(path)) {
    auto toks = split_whitespace(line);
    if (!toks.empty()) ids.push_back(toks.front());
  }
  return ids;
}

/// Documents named by `ids`, in manifest order.
inline std::vector<Document> select_documents(const std::vector<Document>& docs,
                                              const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id.emplace(d.id, &d);
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ReferenceError("manifest names unknown document '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Index form used by the model.

struct IndexedDocument {
  std::vector<std::vector<std::size_t>> sentences;
  std::vector<std::size_t> labels;  // catalog indices, ascending
  std::string lang;
};

inline IndexedDocument index_document(const Document& doc, const Vocabulary& vocab, const LabelCatalog& catalog) {
  IndexedDocument out;
  out.lang = doc.lang;
  for (const auto& s : doc.sentences) {
    if (s.empty()) continue;
    std::vector<std::size_t> ids;
    ids.reserve(s.size());
    for (const auto& t : s) ids.push_back(vocab.index_of(t));
    out.sentences.push_back(std::move(ids));
  }
  if (out.sentences.empty()) throw ConfigError("document '" + doc.id + "' is empty");
  for (const auto& id : doc.labels) out.labels.push_back(catalog.index_of(id));
  std::sort(out.labels.begin(), out.labels.end());
  out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
  return out;
}

inline std::vector<std::vector<std::size_t>> index_descriptions(const LabelCatalog& catalog, const Vocabulary& vocab) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(catalog.size());
  for (const auto& l : catalog.entries()) {
    std::vector<std::size_t> ids;
    for (const auto& t : l.description) ids.push_back(vocab.index_of(t));
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace gile
