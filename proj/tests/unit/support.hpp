#pragma once
// Shared fixtures: random matrices, scratch directories, tiny corpora.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gile/cli.hpp"

namespace gile::test {

inline Mat random_mat(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

inline Vec random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gile_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Small model over the grad-check problem.
struct TinySetup {
  GradCheckProblem problem;
  ModelSpec spec;
  std::vector<const IndexedDocument*> docs;

  TinySetup(OutputKind kind, CellKind cell, std::size_t dim, std::uint64_t seed = 1, std::size_t labels = 6,
            std::size_t documents = 3)
      : problem(gradcheck_problem(labels, documents, seed)) {
    spec.embed_dim = dim;
    spec.encoder.kind = cell;
    spec.encoder.word_dim = dim;
    spec.encoder.sentence_dim = dim;
    spec.encoder.dense_activation = Activation::tanh;
    spec.output.kind = kind;
    if (kind == OutputKind::gile) spec.output.joint_dim = dim;
    for (const auto& d : problem.docs) docs.push_back(&d);
  }

  Model model(const GroupPrefixes& prefixes = {}) const {
    return Model(spec, problem.vocab.size(), problem.catalog, problem.descriptions, prefixes);
  }
};

}  // namespace gile::test
