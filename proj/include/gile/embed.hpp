#pragma once
// Word embedding table E and the averaging label encoder that produces the
// label embedding matrix (one row per catalog label).

#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gile/corpus.hpp"
#include "gile/numkit.hpp"

namespace gile {

inline std::span<const double> lookup(const Mat& table, std::size_t index) {
  if (index >= table.rows()) {
    throw DimensionError("lookup: index " + std::to_string(index) + " out of range for " +
                         std::to_string(table.rows()) + " rows");
  }
  return table.row(index);
}

/// Mean of the description-token rows.
inline Vec encode_label(std::span<const std::size_t> description, const Mat& table) {
  if (description.empty()) throw ConfigError("encode_label: empty description");
  Vec e(table.cols(), 0.0);
  for (auto t : description) axpy(1.0, lookup(table, t), e);
  const double inv = 1.0 / static_cast<double>(description.size());
  for (double& v : e) v *= inv;
  return e;
}

/// Rows of the label embedding for the given catalog indices, in that order.
inline Mat encode_labels(const std::vector<std::vector<std::size_t>>& descriptions,
                         std::span<const std::size_t> which, const Mat& table) {
  Mat out(which.size(), table.cols());
  for (std::size_t r = 0; r < which.size(); ++r) {
    const Vec e = encode_label(descriptions.at(which[r]), table);
    std::copy(e.begin(), e.end(), out.row(r).begin());
  }
  return out;
}

inline Mat encode_all_labels(const std::vector<std::vector<std::size_t>>& descriptions, const Mat& table) {
  std::vector<std::size_t> all(descriptions.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return encode_labels(descriptions, all, table);
}

/// Each description token receives 1/L of its label row's gradient.
inline void backprop_labels(const std::vector<std::vector<std::size_t>>& descriptions,
                            std::span<const std::size_t> which, const Mat& d_rows, Mat& d_table) {
  for (std::size_t r = 0; r < which.size(); ++r) {
    const auto& desc = descriptions.at(which[r]);
    const double inv = 1.0 / static_cast<double>(desc.size());
    for (auto t : desc) axpy(inv, d_rows.row(r), d_table.row(t));
  }
}

/// Label embedding for a fixed table, computed once. When the table is
/// trainable the model bypasses the cache and re-encodes from E per pass.
class LabelEmbeddingCache {
 public:
  const Mat& get(const std::vector<std::vector<std::size_t>>& descriptions, const Mat& table) {
    if (!valid_) {
      cached_ = encode_all_labels(descriptions, table);
      valid_ = true;
    }
    return cached_;
  }
  void invalidate() { valid_ = false; }
  bool valid() const { return valid_; }

 private:
  Mat cached_;
  bool valid_ = false;
};

/// Loads "token v1 ... vd" lines into the rows of `table` for tokens present
/// in `vocab`. An optional "count dim" header line is skipped. Returns the
/// number of vocabulary rows filled.
inline std::size_t load_pretrained(const std::string& path, const Vocabulary& vocab, Mat& table) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_whitespace(line);
    if (toks.empty()) continue;
    if (line_no == 1 && toks.size() == 2 && is_number_token(toks[0]) && is_number_token(toks[1])) continue;
    if (toks.size() != table.cols() + 1) {
      throw ParseError("expected token plus " + std::to_string(table.cols()) + " values, got " +
                           std::to_string(toks.size() - 1),
                       line_no);
    }
    if (!vocab.contains(toks[0])) continue;
    auto row = table.row(vocab.index_of(toks[0]));
    for (std::size_t j = 0; j < table.cols(); ++j) {
      try {
        row[j] = std::stod(toks[j + 1]);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + toks[j + 1] + "'", line_no);
      }
    }
    ++filled;
  }
  return filled;
}

}  // namespace gile
