#pragma once
// Dense 64-bit numerics shared by every layer: matrices, activations,
// normalized exponentials, a seeded RNG, the parameter store and the
// finite-difference gradient oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gile/errors.hpp"

namespace gile {

using Vec = std::vector<double>;

/// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("Mat: data length " + std::to_string(data_.size()) +
                           " != " + shape_str());
    }
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Mat m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("Mat::from_rows: ragged rows");
      std::copy(row.begin(), row.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
      ++i;
    }
    return m;
  }

  /// Column vector (n x 1).
  static Mat column(std::span<const double> v) {
    return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Mat& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
  }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_str() + " x " + b.shape_str());
  }
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// y = W x
inline Vec matvec(const Mat& w, std::span<const double> x) {
  if (w.cols() != x.size()) {
    throw DimensionError("matvec: " + w.shape_str() + " x vector(" + std::to_string(x.size()) + ")");
  }
  Vec y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    auto r = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

/// out += W^T g
inline void add_matvec_t(const Mat& w, std::span<const double> g, std::span<double> out) {
  if (w.rows() != g.size() || w.cols() != out.size()) {
    throw DimensionError("add_matvec_t: " + w.shape_str());
  }
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    auto r = w.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += gi * r[j];
  }
}

/// G += a b^T
inline void add_outer(Mat& g, std::span<const double> a, std::span<const double> b) {
  if (g.rows() != a.size() || g.cols() != b.size()) {
    throw DimensionError("add_outer: " + g.shape_str());
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    auto r = g.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) r[j] += ai * b[j];
  }
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

enum class Activation { relu, tanh, sigmoid, identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity" || s == "linear") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Records the branch taken by every ReLU evaluation on this thread while
/// installed. Finite differences use it to spot probes whose two sides
/// fall on different sides of a kink.
class KinkMonitor {
 public:
  KinkMonitor() : previous_(slot()) { slot() = this; }
  ~KinkMonitor() { slot() = previous_; }
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;

  static void record(bool positive) {
    if (auto* m = slot()) m->branches_.push_back(positive);
  }
  std::vector<bool> take() { return std::exchange(branches_, {}); }

 private:
  static KinkMonitor*& slot() {
    thread_local KinkMonitor* current = nullptr;
    return current;
  }
  KinkMonitor* previous_;
  std::vector<bool> branches_;
};

inline double activate(double x, Activation a) {
  switch (a) {
    case Activation::relu:
      KinkMonitor::record(x > 0.0);
      return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::identity: return x;
  }
  return x;
}

/// Derivative expressed through the activation's output y = act(x).
inline double activation_grad(double y, Activation a) {
  switch (a) {
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

inline void apply_inplace(std::span<double> x, Activation a) {
  for (double& v : x) v = activate(v, a);
}

inline Vec apply_nonlinearity(std::span<const double> x, Activation a) {
  Vec y(x.begin(), x.end());
  apply_inplace(y, a);
  return y;
}

inline Mat apply_nonlinearity(const Mat& x, Activation a) {
  Mat y = x;
  apply_inplace(y.data(), a);
  return y;
}

inline Vec softmax_normalize(std::span<const double> scores) {
  if (scores.empty()) throw DimensionError("softmax_normalize: empty input");
  const double mx = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

/// Seeded generator. Distribution helpers are written out so that sequences
/// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw DimensionError("Rng::index: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
  }

  double normal() {
    // Box-Muller; second variate discarded to keep the stream stateless.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw ParseError("Rng: bad engine state");
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Gradient buffers keyed by parameter name.
class Grads {
 public:
  Mat& at(const std::string& name) {
    auto it = buffers_.find(name);
    if (it == buffers_.end()) throw ReferenceError("no gradient buffer '" + name + "'");
    return it->second;
  }
  const Mat& at(const std::string& name) const {
    auto it = buffers_.find(name);
    if (it == buffers_.end()) throw ReferenceError("no gradient buffer '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return buffers_.count(name) != 0; }
  void add_buffer(const std::string& name, std::size_t rows, std::size_t cols) {
    buffers_.insert_or_assign(name, Mat(rows, cols));
  }
  void zero() {
    for (auto& [_, m] : buffers_) m.fill(0.0);
  }
  void accumulate(const Grads& other) {
    for (const auto& [name, g] : other.buffers_) {
      Mat& dst = at(name);
      axpy(1.0, g.data(), dst.data());
    }
  }
  const std::map<std::string, Mat>& buffers() const { return buffers_; }
  std::map<std::string, Mat>& buffers() { return buffers_; }

 private:
  std::map<std::string, Mat> buffers_;
};

/// Named parameters with paired gradient buffers. Non-trainable entries have
/// no gradient buffer and are never touched by the optimizer.
class ParamStore {
 public:
  struct Entry {
    Mat value;
    bool trainable = true;
  };

  void add(const std::string& name, Mat value, bool trainable = true) {
    if (entries_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
    if (trainable) grads_.add_buffer(name, value.rows(), value.cols());
    entries_.emplace(name, Entry{std::move(value), trainable});
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  const Mat& value(const std::string& name) const { return entry(name).value; }
  Mat& mutable_value(const std::string& name) { return entry(name).value; }
  bool trainable(const std::string& name) const { return entry(name).trainable; }

  void set_trainable(const std::string& name, bool trainable) {
    Entry& e = entry(name);
    e.trainable = trainable;
    if (trainable && !grads_.has(name)) grads_.add_buffer(name, e.value.rows(), e.value.cols());
    if (!trainable) grads_.buffers().erase(name);
  }

  Grads& grads() { return grads_; }
  const Grads& grads() const { return grads_; }
  Mat& grad(const std::string& name) { return grads_.at(name); }

  /// Zero-filled gradient table shaped like this store's trainable entries.
  Grads zero_grads_like() const {
    Grads g;
    for (const auto& [name, e] : entries_)
      if (e.trainable) g.add_buffer(name, e.value.rows(), e.value.cols());
    return g;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::size_t scalar_count(bool trainable_only = false) const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_)
      if (!trainable_only || e.trainable) n += e.value.size();
    return n;
  }

  /// Values and flags equal; gradients ignored.
  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (const auto& [name, e] : a.entries_) {
      auto it = b.entries_.find(name);
      if (it == b.entries_.end()) return false;
      if (it->second.trainable != e.trainable || !(it->second.value == e.value)) return false;
    }
    return true;
  }

 private:
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ReferenceError("no parameter '" + name + "'");
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ReferenceError("no parameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, Entry> entries_;
  Grads grads_;
};

/// Scalars whose probe straddled a ReLU kink, by entry name.
using KinkMask = std::map<std::string, std::vector<bool>>;

/// Central-difference gradient of `f` with respect to every scalar of the
/// selected entries (all trainable entries when `only` is empty). Parameters
/// are restored bit-exactly after each probe.
///
/// When `kinks` is non-null, a probe whose two evaluations take different
/// ReLU branches is retried with the step divided by 10, up to three times;
/// a scalar still straddling a kink after that is flagged in `kinks`.
inline std::map<std::string, Mat> finite_diff_grad(
    const std::function<double(const ParamStore&)>& f, ParamStore& params, double eps,
    const std::vector<std::string>& only = {}, KinkMask* kinks = nullptr) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be > 0");
  std::vector<std::string> names = only;
  if (names.empty()) {
    for (const auto& [name, e] : params.entries())
      if (e.trainable) names.push_back(name);
  }
  std::map<std::string, Mat> out;
  for (const auto& name : names) {
    Mat& v = params.mutable_value(name);
    Mat g(v.rows(), v.cols());
    std::vector<bool> mask(kinks ? v.size() : 0, false);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v.data()[i];
      double step = eps;
      for (int attempt = 0;; ++attempt) {
        KinkMonitor monitor;
        v.data()[i] = orig + step;
        const double fp = f(params);
        const auto plus = monitor.take();
        v.data()[i] = orig - step;
        const double fm = f(params);
        const auto minus = monitor.take();
        v.data()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
          throw NumericError("finite_diff_grad: non-finite evaluation at '" + name + "'[" +
                             std::to_string(i) + "]");
        }
        g.data()[i] = (fp - fm) / (2.0 * step);
        if (!kinks || plus == minus) break;
        if (attempt == 3) {
          mask[i] = true;
          break;
        }
        step /= 10.0;
      }
    }
    if (kinks) (*kinks)[name] = std::move(mask);
    out.emplace(name, std::move(g));
  }
  return out;
}

/// Glorot-uniform initialization.
inline Mat glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

inline Mat scaled_normal(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

}  // namespace gile
