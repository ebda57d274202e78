#pragma once
// Checkpoint container: resolved config, vocabulary, label catalog,
// parameters, optimizer moments, RNG states and loop position.
//
// The format is line-oriented text. Every section starts with
// `@name <count>` and doubles are written as hexadecimal floats, so saving
// the same state twice gives identical bytes and loading is exact.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gile/corpus.hpp"
#include "gile/numkit.hpp"
#include "gile/training.hpp"

namespace gile {

struct Checkpoint {
  std::string config;  // resolved INI text
  Vocabulary vocab;
  LabelCatalog catalog;
  ParamStore params;
  AdamConfig adam_config;
  std::uint64_t adam_steps = 0;
  std::map<std::string, Adam::Moments> moments;
  std::map<std::string, std::string> rng_states;  // by stream name
  TrainState state;
};

namespace detail {

inline std::string hex(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  if (ec != std::errc()) throw Error("checkpoint: cannot format value");
  return std::string(buf, p);
}

inline double unhex(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("checkpoint: bad value '" + s + "'", 0);
  return v;
}

inline void write_values(std::ostream& os, const Mat& m) {
  for (std::size_t i = 0; i < m.size(); ++i) os << (i ? " " : "") << hex(m.data()[i]);
  os << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) throw ParseError("checkpoint: unexpected end of file", n_);
    ++n_;
    return s;
  }

  /// Reads "@name count" and returns count.
  std::size_t section(const std::string& name) {
    std::istringstream is(line());
    std::string tag;
    std::size_t count = 0;
    if (!(is >> tag >> count) || tag != "@" + name) throw ParseError("checkpoint: expected section @" + name, n_);
    return count;
  }

  Mat values(std::size_t rows, std::size_t cols) {
    Mat m(rows, cols);
    std::istringstream is(line());
    std::string tok;
    std::size_t i = 0;
    while (is >> tok) {
      if (i >= m.size()) throw ParseError("checkpoint: too many values", n_);
      m.data()[i++] = unhex(tok);
    }
    if (i != m.size()) throw ParseError("checkpoint: expected " + std::to_string(m.size()) + " values", n_);
    return m;
  }

  std::size_t line_number() const { return n_; }

 private:
  std::istream& in_;
  std::size_t n_ = 0;
};

}  // namespace detail

inline constexpr const char* kCheckpointMagic = "gile-checkpoint 1";

inline void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  os << kCheckpointMagic << '\n';

  std::vector<std::string> cfg_lines;
  {
    std::istringstream is(c.config);
    std::string l;
    while (std::getline(is, l)) cfg_lines.push_back(l);
  }
  os << "@config " << cfg_lines.size() << '\n';
  for (const auto& l : cfg_lines) os << l << '\n';

  os << "@vocab " << c.vocab.size() << '\n';
  for (const auto& t : c.vocab.tokens()) os << t << '\n';

  os << "@labels " << c.catalog.size() << '\n';
  for (const auto& e : c.catalog.entries()) os << to_json(e).dump() << '\n';

  os << "@params " << c.params.entries().size() << '\n';
  for (const auto& [name, e] : c.params.entries()) {
    os << name << ' ' << e.value.rows() << ' ' << e.value.cols() << ' ' << (e.trainable ? 1 : 0) << '\n';
    detail::write_values(os, e.value);
  }

  os << "@adam " << c.moments.size() << '\n';
  os << c.adam_steps << ' ' << detail::hex(c.adam_config.lr) << ' ' << detail::hex(c.adam_config.beta1) << ' '
     << detail::hex(c.adam_config.beta2) << ' ' << detail::hex(c.adam_config.eps) << '\n';
  for (const auto& [name, mv] : c.moments) {
    os << name << ' ' << mv.m.rows() << ' ' << mv.m.cols() << '\n';
    detail::write_values(os, mv.m);
    detail::write_values(os, mv.v);
  }

  os << "@rng " << c.rng_states.size() << '\n';
  for (const auto& [name, st] : c.rng_states) os << name << ' ' << st << '\n';

  const auto& s = c.state;
  os << "@state " << s.order.size() << '\n';
  os << s.step << ' ' << s.epoch << ' ' << s.cursor << ' ' << detail::hex(s.best_metric) << ' ' << s.best_epoch << ' '
     << s.bad_evals << ' ' << (s.stopped ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < s.order.size(); ++i) os << (i ? " " : "") << s.order[i];
  os << '\n';
}

inline Checkpoint read_checkpoint(std::istream& in) {
  detail::Reader r(in);
  if (r.line() != kCheckpointMagic) throw ParseError("not a checkpoint file", 1);
  Checkpoint c;

  const auto n_cfg = r.section("config");
  for (std::size_t i = 0; i < n_cfg; ++i) c.config += r.line() + '\n';

  const auto n_vocab = r.section("vocab");
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n_vocab; ++i) tokens.push_back(r.line());
  c.vocab = Vocabulary(tokens);
  if (c.vocab.tokens() != tokens) throw ParseError("checkpoint: vocabulary does not round-trip", r.line_number());

  const auto n_labels = r.section("labels");
  for (std::size_t i = 0; i < n_labels; ++i) {
    const auto j = nlohmann::json::parse(r.line());
    c.catalog.add({j.at("id").get<std::string>(), split_whitespace(j.at("description").get<std::string>()),
                   j.at("seen").get<bool>()});
  }

  const auto n_params = r.section("params");
  for (std::size_t i = 0; i < n_params; ++i) {
    std::istringstream is(r.line());
    std::string name;
    std::size_t rows = 0, cols = 0;
    int trainable = 0;
    if (!(is >> name >> rows >> cols >> trainable)) throw ParseError("checkpoint: bad parameter header", r.line_number());
    c.params.add(name, r.values(rows, cols), trainable != 0);
  }

  const auto n_moments = r.section("adam");
  {
    std::istringstream is(r.line());
    std::string lr, b1, b2, eps;
    if (!(is >> c.adam_steps >> lr >> b1 >> b2 >> eps)) throw ParseError("checkpoint: bad optimizer header", r.line_number());
    c.adam_config = {detail::unhex(lr), detail::unhex(b1), detail::unhex(b2), detail::unhex(eps)};
  }
  for (std::size_t i = 0; i < n_moments; ++i) {
    std::istringstream is(r.line());
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(is >> name >> rows >> cols)) throw ParseError("checkpoint: bad moment header", r.line_number());
    Mat m = r.values(rows, cols);
    Mat v = r.values(rows, cols);
    c.moments.emplace(name, Adam::Moments{std::move(m), std::move(v)});
  }

  const auto n_rng = r.section("rng");
  for (std::size_t i = 0; i < n_rng; ++i) {
    const auto l = r.line();
    const auto sp = l.find(' ');
    if (sp == std::string::npos) throw ParseError("checkpoint: bad rng line", r.line_number());
    c.rng_states.emplace(l.substr(0, sp), l.substr(sp + 1));
  }

  const auto n_order = r.section("state");
  {
    std::istringstream is(r.line());
    std::string best;
    int stopped = 0;
    auto& s = c.state;
    if (!(is >> s.step >> s.epoch >> s.cursor >> best >> s.best_epoch >> s.bad_evals >> stopped)) {
      throw ParseError("checkpoint: bad state line", r.line_number());
    }
    s.best_metric = detail::unhex(best);
    s.stopped = stopped != 0;
    std::istringstream os(r.line());
    std::size_t v = 0;
    while (os >> v) s.order.push_back(v);
    if (s.order.size() != n_order) throw ParseError("checkpoint: bad order line", r.line_number());
  }
  return c;
}

inline std::string serialize(const Checkpoint& c) {
  std::ostringstream os;
  write_checkpoint(os, c);
  return os.str();
}

/// Writes to a sibling temporary file and renames it into place.
inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp + "'");
    write_checkpoint(out, c);
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace gile
