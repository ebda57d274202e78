#pragma once
// Run configuration: a plain-text file of `key = value` lines grouped under
// `[section]` headers. Every key has a default; unknown sections or keys are
// rejected. Comments start with '#' or ';'.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gile/encoders.hpp"
#include "gile/errors.hpp"
#include "gile/metrics.hpp"
#include "gile/model.hpp"
#include "gile/outlayers.hpp"
#include "gile/synth.hpp"
#include "gile/training.hpp"

namespace gile {

struct KeyDef {
  const char* section;
  const char* key;
  const char* default_value;
  const char* doc;
};

// clang-format off
inline const std::vector<KeyDef>& config_keys() {
  static const std::vector<KeyDef> keys{
      {"data", "dir", ".", "base directory for the relative paths below; relative to the config file"},
      {"data", "train", "train.jsonl", "training documents (JSONL)"},
      {"data", "valid", "valid.jsonl", "validation documents; empty disables early stopping"},
      {"data", "test", "test.jsonl", "evaluation documents"},
      {"data", "labels", "labels.jsonl", "label catalog with descriptions and seen flags"},
      {"data", "pretrained", "", "optional word vectors, one 'token v1 .. vd' per line"},
      {"data", "min_count", "1", "minimum token frequency for the vocabulary"},

      {"model", "embed_dim", "100", "word embedding dimension d"},
      {"model", "train_embeddings", "true", "update E during training"},
      {"model", "embed_init_scale", "0.1", "std-dev of the random embedding initialization"},
      {"model", "encoder", "dense", "cell kind: dense | gru | bigru"},
      {"model", "pooling", "attention", "attention (HAN) | average (HNN) | flat-average (NN)"},
      {"model", "word_dim", "100", "word-level encoder output size"},
      {"model", "sentence_dim", "100", "sentence-level encoder output size d_h"},
      {"model", "dense_activation", "relu", "activation of dense cells"},
      {"model", "word_level_only", "false", "treat each document as one sentence (word-level attention network)"},

      {"output", "kind", "gile", "linear | bilinear | gile | gile-label-only | gile-input-only | gile-constrained"},
      {"output", "joint_dim", "0", "joint space size d_j; 0 derives it from capacity matching"},
      {"output", "activation", "relu", "joint-space nonlinearity"},
      {"output", "bilinear_variant", "plain", "plain | label-nonlin | input-nonlin"},
      {"output", "tied_embeddings", "false", "linear unit scores with label embeddings instead of W (needs d == d_h)"},

      {"train", "batch_size", "64", "documents per step"},
      {"train", "epoch_size", "0", "examples per epoch; 0 = one pass over the training set"},
      {"train", "max_epochs", "10", "upper bound on epochs"},
      {"train", "lr", "0.001", "ADAM learning rate"},
      {"train", "beta1", "0.9", "ADAM first-moment decay"},
      {"train", "beta2", "0.999", "ADAM second-moment decay"},
      {"train", "eps", "1e-8", "ADAM epsilon"},
      {"train", "negative_fraction", "1.0", "fraction of negative labels scored per example, in (0,1]"},
      {"train", "seed", "1", "seed for initialization, shuffling and sampling"},
      {"train", "max_sentences", "30", "truncation: sentences per document"},
      {"train", "max_words", "30", "truncation: words per sentence"},
      {"train", "patience", "5", "evaluations without improvement before stopping"},
      {"train", "stop_metric", "avg_precision", "early-stop metric: avg_precision | micro_f1"},
      {"train", "threads", "1", "worker threads per batch; > 1 gives up bit-exact reproducibility"},
      {"train", "out", "run", "output directory for checkpoints, logs and reports"},
      {"train", "resume", "false", "continue from <out>/last.ckpt when present"},

      {"eval", "threshold", "0", "decision threshold for F1; 0 uses 0.4 below 400 seen labels and 0.2 otherwise"},
      {"eval", "low_resource", "false", "use the low-resource threshold 0.3"},
      {"eval", "mixed_candidates", "false", "rank within all labels instead of the scope's labels"},
      {"eval", "scope", "both", "seen | unseen | both"},

      {"share", "languages", "", "comma-separated languages for multilingual training; empty = monolingual"},
      {"share", "embeddings", "shared", "shared | per-language"},
      {"share", "word_encoder", "per-language", "shared | per-language"},
      {"share", "word_attention", "shared", "shared | per-language"},
      {"share", "sentence_encoder", "per-language", "shared | per-language"},
      {"share", "sentence_attention", "shared", "shared | per-language"},
      {"share", "joint", "shared", "U, b_u, V, b_v and bilinear W: shared | per-language"},
      {"share", "classifier", "per-language", "w, b and linear W, b: shared | per-language"},

      {"predict", "input", "", "documents to label; empty uses data.test"},
      {"predict", "top_n", "5", "labels per document"},

      {"gradcheck", "tolerance", "1e-4", "max relative error"},
      {"gradcheck", "dim", "6", "embedding, encoder and joint dims used by the check"},
      {"gradcheck", "documents", "2", "documents per checked batch"},
      {"gradcheck", "labels", "6", "labels in the synthetic check catalog"},
      {"gradcheck", "eps", "1e-3", "finite-difference step"},
      {"gradcheck", "activations", "relu,tanh", "joint-space activations to check"},
      {"gradcheck", "sabotage", "", "parameter entry whose analytic gradient is negated (negative control)"},

      {"synth", "topics", "12", "latent topics"},
      {"synth", "words_per_topic", "20", "vocabulary per topic"},
      {"synth", "description_words_per_topic", "2", "topic words used in each label description"},
      {"synth", "topics_per_label", "2", "topics combined into one label"},
      {"synth", "labels", "40", "label count"},
      {"synth", "docs_per_label", "200", "documents generated per primary label"},
      {"synth", "min_sentences", "2", "sentences per document, lower bound"},
      {"synth", "max_sentences", "5", "sentences per document, upper bound"},
      {"synth", "min_words", "5", "words per sentence, lower bound"},
      {"synth", "max_words", "12", "words per sentence, upper bound"},
      {"synth", "noise_fraction", "0.3", "share of background tokens per document"},
      {"synth", "noise_words", "200", "background vocabulary size"},
      {"synth", "second_label_prob", "0.3", "chance of a second label per document"},
      {"synth", "unseen_fraction", "0.25", "share of labels withheld from training"},
      {"synth", "valid_fraction", "0.1", "validation split share"},
      {"synth", "test_fraction", "0.1", "test split share"},
      {"synth", "languages", "en", "comma-separated language tags assigned round-robin"},
      {"synth", "seed", "1", "generator seed"},

      {"sweep", "fractions", "0.1,0.25,0.5,1.0", "negative fractions for sample-sweep"},
  };
  return keys;
}
// clang-format on

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Resolved key/value table; starts from defaults.
class ConfigTable {
 public:
  ConfigTable() {
    for (const auto& k : config_keys()) values_[full(k.section, k.key)] = k.default_value;
  }

  static ConfigTable parse(std::istream& in) {
    ConfigTable t;
    std::string line, section;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      line = trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError("unterminated section header", n);
        section = trim(line.substr(1, line.size() - 2));
        if (!known_section(section)) throw ConfigError("line " + std::to_string(n) + ": unknown section '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected key = value", n);
      if (section.empty()) throw ParseError("key outside of a section", n);
      const std::string key = trim(line.substr(0, eq));
      const std::string name = full(section, key);
      if (!t.values_.count(name)) throw ConfigError("line " + std::to_string(n) + ": unknown key '" + name + "'");
      t.values_[name] = trim(line.substr(eq + 1));
    }
    return t;
  }

  static ConfigTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    auto t = parse(in);
    t.origin_ = std::filesystem::absolute(path).parent_path().string();
    return t;
  }

  /// Directory of the config file, or the working directory.
  const std::string& origin() const { return origin_; }

  void set(const std::string& name, const std::string& value) {
    if (!values_.count(name)) throw ConfigError("unknown key '" + name + "'");
    values_[name] = value;
  }

  const std::string& str(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("unknown key '" + name + "'");
    return it->second;
  }

  std::uint64_t u64(const std::string& name) const {
    const auto& s = str(name);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(name + ": expected a non-negative integer, got '" + s + "'");
    return v;
  }
  std::size_t size(const std::string& name) const { return static_cast<std::size_t>(u64(name)); }

  double real(const std::string& name) const {
    const auto& s = str(name);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(name + ": expected a number, got '" + s + "'");
    }
  }

  bool flag(const std::string& name) const {
    const auto& s = str(name);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(name + ": expected true or false, got '" + s + "'");
  }

  /// Path value resolved against data.dir, itself resolved against origin().
  std::string path(const std::string& name) const {
    const auto& v = str(name);
    if (v.empty()) return v;
    std::filesystem::path p(v);
    if (p.is_absolute()) return v;
    if (name == "data.dir" || name == "train.out") return (std::filesystem::path(origin_) / p).lexically_normal().string();
    return (std::filesystem::path(path("data.dir")) / p).lexically_normal().string();
  }

  /// Every key with its resolved value, grouped by section, defaults included.
  std::string to_ini() const {
    std::ostringstream os;
    std::string section;
    for (const auto& k : config_keys()) {
      if (section != k.section) {
        if (!section.empty()) os << '\n';
        section = k.section;
        os << '[' << section << "]\n";
      }
      os << k.key << " = " << values_.at(full(k.section, k.key)) << '\n';
    }
    return os.str();
  }

  friend bool operator==(const ConfigTable& a, const ConfigTable& b) { return a.values_ == b.values_; }

 private:
  static std::string full(const std::string& s, const std::string& k) { return s + "." + k; }
  static bool known_section(const std::string& s) {
    return std::any_of(config_keys().begin(), config_keys().end(), [&](const KeyDef& k) { return s == k.section; });
  }

  std::map<std::string, std::string> values_;
  std::string origin_ = std::filesystem::current_path().string();
};

inline std::string describe_keys() {
  std::ostringstream os;
  for (const auto& k : config_keys())
    os << k.section << '.' << k.key << " (default '" << k.default_value << "'): " << k.doc << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Typed views.

inline ModelSpec model_spec(const ConfigTable& t) {
  ModelSpec m;
  m.embed_dim = t.size("model.embed_dim");
  m.train_embeddings = t.flag("model.train_embeddings");
  m.embed_init_scale = t.real("model.embed_init_scale");
  m.encoder.kind = parse_cell_kind(t.str("model.encoder"));
  m.encoder.pooling = parse_pooling(t.str("model.pooling"));
  m.encoder.word_dim = t.size("model.word_dim");
  m.encoder.sentence_dim = t.size("model.sentence_dim");
  m.encoder.dense_activation = parse_activation(t.str("model.dense_activation"));
  m.encoder.validate();
  m.output.kind = parse_output_kind(t.str("output.kind"));
  m.output.joint_dim = t.size("output.joint_dim");
  m.output.activation = parse_activation(t.str("output.activation"));
  m.output.bilinear_variant = parse_bilinear_variant(t.str("output.bilinear_variant"));
  m.output.tied_embeddings = t.flag("output.tied_embeddings");
  if (m.embed_dim == 0) throw ConfigError("model.embed_dim must be > 0");
  return m;
}

inline TrainConfig train_config(const ConfigTable& t) {
  TrainConfig c;
  c.batch_size = t.size("train.batch_size");
  c.epoch_size = t.size("train.epoch_size");
  c.max_epochs = t.size("train.max_epochs");
  c.adam.lr = t.real("train.lr");
  c.adam.beta1 = t.real("train.beta1");
  c.adam.beta2 = t.real("train.beta2");
  c.adam.eps = t.real("train.eps");
  c.negative_fraction = t.real("train.negative_fraction");
  c.seed = t.u64("train.seed");
  c.max_sentences = t.size("train.max_sentences");
  c.max_words = t.size("train.max_words");
  c.patience = t.size("train.patience");
  c.stop_metric = parse_stop_metric(t.str("train.stop_metric"));
  c.threads = t.size("train.threads");
  c.validate();
  return c;
}

inline EvalProtocol eval_protocol(const ConfigTable& t) {
  EvalProtocol p;
  p.threshold = t.real("eval.threshold");
  p.low_resource = t.flag("eval.low_resource");
  p.mixed_candidates = t.flag("eval.mixed_candidates");
  p.max_sentences = t.size("train.max_sentences");
  p.max_words = t.size("train.max_words");
  if (p.threshold != 0.0 && !(p.threshold > 0.0 && p.threshold < 1.0)) throw ConfigError("eval.threshold must be in (0,1)");
  return p;
}

inline SharingScheme sharing_scheme(const ConfigTable& t) {
  SharingScheme s;
  for (const auto& g : SharingScheme::group_names()) {
    const auto& v = t.str("share." + g);
    if (v == "shared") s.flag(g) = true;
    else if (v == "per-language") s.flag(g) = false;
    else throw ConfigError("share." + g + ": expected shared or per-language, got '" + v + "'");
  }
  return s;
}

inline SynthConfig synth_config(const ConfigTable& t) {
  SynthConfig c;
  c.topics = t.size("synth.topics");
  c.words_per_topic = t.size("synth.words_per_topic");
  c.description_words_per_topic = t.size("synth.description_words_per_topic");
  c.topics_per_label = t.size("synth.topics_per_label");
  c.labels = t.size("synth.labels");
  c.docs_per_label = t.size("synth.docs_per_label");
  c.min_sentences = t.size("synth.min_sentences");
  c.max_sentences = t.size("synth.max_sentences");
  c.min_words = t.size("synth.min_words");
  c.max_words = t.size("synth.max_words");
  c.noise_fraction = t.real("synth.noise_fraction");
  c.noise_words = t.size("synth.noise_words");
  c.second_label_prob = t.real("synth.second_label_prob");
  c.unseen_fraction = t.real("synth.unseen_fraction");
  c.valid_fraction = t.real("synth.valid_fraction");
  c.test_fraction = t.real("synth.test_fraction");
  c.languages = split_list(t.str("synth.languages"));
  c.seed = t.u64("synth.seed");
  c.validate();
  return c;
}

inline std::vector<double> sweep_fractions(const ConfigTable& t) {
  std::vector<double> out;
  for (const auto& s : split_list(t.str("sweep.fractions"))) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError("sweep.fractions: bad number '" + s + "'");
    }
    if (!(out.back() > 0.0 && out.back() <= 1.0)) throw ConfigError("sweep.fractions: values must be in (0,1]");
  }
  return out;
}

}  // namespace gile
