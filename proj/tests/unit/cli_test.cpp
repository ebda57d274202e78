#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "gile/cli.hpp"
#include "support.hpp"

namespace gile {
namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "gile");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  RunResult r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Tiny corpus plus a config pointing at it.
class CliFlow : public ::testing::Test {
 protected:
  void SetUp() override {
    write_config("gile", "");
    ASSERT_EQ(run({"synth", "--config", config_, "--out", dir_.file("data")}).code, kExitOk);
  }

  void write_config(const std::string& kind, const std::string& extra) {
    config_ = dir_.file(kind + ".ini");
    test::write_file(config_,
                     "[data]\ndir = data\n"
                     "[model]\nembed_dim = 4\nword_dim = 4\nsentence_dim = 4\nencoder = dense\n"
                     "[output]\nkind = " + kind + "\njoint_dim = 4\n"
                     "[train]\nbatch_size = 8\nmax_epochs = 2\nlr = 0.01\nout = run_" + kind + "\n"
                     "[synth]\ntopics = 4\nwords_per_topic = 5\nlabels = 6\ndocs_per_label = 8\n"
                     "noise_words = 10\nunseen_fraction = 0.34\nvalid_fraction = 0.2\ntest_fraction = 0.2\n" +
                         extra);
  }

  test::ScratchDir dir_{"cli"};
  std::string config_;
};

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--scope", "sideways"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--config", "/nonexistent.ini"}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--help"}).code, kExitOk);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  test::ScratchDir dir("cli_key");
  test::write_file(dir.file("bad.ini"), "[model]\nembed_dimm = 3\n");
  const auto r = run({"train", "--config", dir.file("bad.ini")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("model.embed_dimm"), std::string::npos);
}

TEST_F(CliFlow, SynthIsByteIdenticalForASeed) {
  ASSERT_EQ(run({"synth", "--config", config_, "--out", dir_.file("again")}).code, kExitOk);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "labels.jsonl", "train.ids"})
    EXPECT_EQ(test::read_file(dir_.file(std::string("data/") + f)), test::read_file(dir_.file(std::string("again/") + f)))
        << f;
  ASSERT_EQ(run({"synth", "--config", config_, "--seed", "2", "--out", dir_.file("other")}).code, kExitOk);
  EXPECT_NE(test::read_file(dir_.file("data/train.jsonl")), test::read_file(dir_.file("other/train.jsonl")));
}

TEST_F(CliFlow, TrainEvaluatePredict) {
  const auto t = run({"train", "--config", config_});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  const auto run_dir = dir_.file("run_gile");
  for (const char* f : {"best.ckpt", "last.ckpt", "train.log", "config.ini", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(run_dir + "/" + f)) << f;

  const auto e = run({"evaluate", "--config", config_});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_TRUE(std::filesystem::exists(run_dir + "/metrics_seen.json"));
  EXPECT_TRUE(std::filesystem::exists(run_dir + "/metrics_unseen.json"));
  const auto metrics = nlohmann::json::parse(test::read_file(run_dir + "/metrics_unseen.json"));
  EXPECT_EQ(metrics.at("scope"), "unseen");
  EXPECT_EQ(metrics.at("protocol").at("max_sentences"), 30);

  const auto p = run({"predict", "--config", config_, "--top-n", "2"});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  const auto preds = test::read_file(run_dir + "/predictions.jsonl");
  EXPECT_EQ(count_lines(preds), count_lines(test::read_file(dir_.file("data/test.jsonl"))));
  EXPECT_EQ(nlohmann::json::parse(preds.substr(0, preds.find('\n'))).at("labels").size(), 2u);

  test::write_file(dir_.file("empty.jsonl"), "");
  const auto empty = run({"predict", "--config", config_, "--input", dir_.file("empty.jsonl")});
  EXPECT_EQ(empty.code, kExitOk);
  EXPECT_EQ(test::read_file(run_dir + "/predictions.jsonl"), "");

  EXPECT_EQ(run({"evaluate", "--config", config_, "--checkpoint", dir_.file("missing.ckpt")}).code, kExitRuntime);
}

TEST_F(CliFlow, LinearUnitRefusesUnseenScope) {
  write_config("linear", "");
  ASSERT_EQ(run({"train", "--config", config_}).code, kExitOk);
  const auto unseen = run({"evaluate", "--config", config_, "--scope", "unseen"});
  EXPECT_EQ(unseen.code, kExitUnsupported);
  EXPECT_NE(unseen.err.find("unsupported"), std::string::npos);
  const auto both = run({"evaluate", "--config", config_, "--scope", "both"});
  EXPECT_EQ(both.code, kExitOk);
  EXPECT_NE(both.out.find("unseen scope: unsupported"), std::string::npos);
  EXPECT_EQ(run({"evaluate", "--config", config_, "--scope", "seen"}).code, kExitOk);
}

TEST_F(CliFlow, TrainingIsReproducible) {
  ASSERT_EQ(run({"train", "--config", config_, "--out", dir_.file("a")}).code, kExitOk);
  const auto first = test::read_file(dir_.file("a/best.ckpt"));
  std::filesystem::remove_all(dir_.file("a"));
  ASSERT_EQ(run({"train", "--config", config_, "--out", dir_.file("a")}).code, kExitOk);
  EXPECT_EQ(test::read_file(dir_.file("a/best.ckpt")), first);
}

TEST_F(CliFlow, SampleSweep) {
  const auto r = run({"sample-sweep", "--config", config_, "--fractions", "0.5,1.0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(test::read_file(dir_.file("run_gile/sweep.csv"))), 3u);
  write_config("gile", "[sweep]\nfractions =\n");
  EXPECT_EQ(run({"sample-sweep", "--config", config_}).code, kExitUsage);
  EXPECT_EQ(run({"sample-sweep", "--config", config_, "--fractions", "1.5"}).code, kExitUsage);
  write_config("gile", "[share]\nlanguages = en,de\n");
  EXPECT_EQ(run({"sample-sweep", "--config", config_}).code, kExitUnsupported);
}

TEST(Cli, GradcheckPassesAndSabotageFails) {
  test::ScratchDir dir("cli_gc");
  test::write_file(dir.file("gc.ini"), "[gradcheck]\ndim = 3\nactivations = tanh\n");
  const auto ok = run({"gradcheck", "--config", dir.file("gc.ini"), "--out", dir.path().string()});
  EXPECT_EQ(ok.code, kExitOk) << ok.out;
  EXPECT_TRUE(std::filesystem::exists(dir.file("gradcheck.json")));
  const auto bad = run({"gradcheck", "--config", dir.file("gc.ini"), "--sabotage", "joint.V"});
  EXPECT_EQ(bad.code, kExitRuntime);
  EXPECT_NE(bad.out.find("failed: joint.V"), std::string::npos);
}

TEST(Cli, BinaryReportsExitCodes) {
  const std::string cli = GILE_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(cli + " --help"), 0);
  EXPECT_EQ(status(cli + " nope"), 1);
  EXPECT_EQ(status(cli + " evaluate --checkpoint /nonexistent.ckpt"), 2);
}

}  // namespace
}  // namespace gile
