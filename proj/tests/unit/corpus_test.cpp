#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "gile/corpus.hpp"
#include "gile/synth.hpp"
#include "support.hpp"

namespace gile {
namespace {

LabelCatalog two_labels() {
  return LabelCatalog({{"A", {"alpha", "words"}, true}, {"B", {"beta"}, true}});
}

Document doc(std::string id, std::vector<std::vector<std::string>> sentences, std::vector<std::string> labels = {}) {
  Document d;
  d.id = std::move(id);
  d.sentences = std::move(sentences);
  d.labels = std::move(labels);
  return d;
}

TEST(LoadCorpus, TwoWellFormedLines) {
  test::ScratchDir dir("corpus");
  test::write_file(dir.file("labels.jsonl"),
                   R"({"id":"A","description":"alpha words","seen":true})"
                   "\n"
                   R"({"id":"B","description":"beta","seen":false})"
                   "\n");
  test::write_file(dir.file("docs.jsonl"),
                   R"({"id":"d1","lang":"en","sentences":[["x","y"],["z"]],"labels":["A"]})"
                   "\n"
                   R"({"id":"d2","lang":"de","sentences":[["q"]],"labels":["A","B"]})"
                   "\n");
  const Corpus c = load_corpus(dir.file("docs.jsonl"), dir.file("labels.jsonl"));
  ASSERT_EQ(c.documents.size(), 2u);
  EXPECT_EQ(c.documents[1].lang, "de");
  EXPECT_EQ(c.documents[0].sentences.size(), 2u);
  EXPECT_FALSE(c.labels[1].seen);
}

TEST(LoadCorpus, MissingSentencesIsParseErrorWithLine) {
  test::ScratchDir dir("corpus");
  test::write_file(dir.file("labels.jsonl"), R"({"id":"A","description":"alpha"})"
                                             "\n");
  test::write_file(dir.file("docs.jsonl"),
                   R"({"id":"d1","sentences":[["x"]],"labels":["A"]})"
                   "\n"
                   R"({"id":"d2","labels":["A"]})"
                   "\n");
  try {
    load_corpus(dir.file("docs.jsonl"), dir.file("labels.jsonl"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, UnknownLabelIsReferenceErrorNamingId) {
  test::ScratchDir dir("corpus");
  test::write_file(dir.file("labels.jsonl"), R"({"id":"A","description":"alpha"})"
                                             "\n");
  test::write_file(dir.file("docs.jsonl"), R"({"id":"d1","sentences":[["x"]],"labels":["ZZZ"]})"
                                           "\n");
  try {
    load_corpus(dir.file("docs.jsonl"), dir.file("labels.jsonl"));
    FAIL() << "expected ReferenceError";
  } catch (const ReferenceError& e) {
    EXPECT_NE(std::string(e.what()).find("ZZZ"), std::string::npos);
  }
}

TEST(LoadCorpus, MalformedJsonReportsLine) {
  test::ScratchDir dir("corpus");
  test::write_file(dir.file("labels.jsonl"), "{\"id\":\"A\",\"description\":\"a\"}\n\n{not json\n");
  try {
    load_labels(dir.file("labels.jsonl"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LabelCatalog, RejectsEmptyDescriptionsAndDuplicates) {
  LabelCatalog c;
  EXPECT_THROW(c.add({"A", {}, true}), ConfigError);
  c.add({"A", {"a"}, true});
  EXPECT_THROW(c.add({"A", {"b"}, true}), ConfigError);
  EXPECT_THROW(c.index_of("missing"), ReferenceError);
}

TEST(BuildVocab, MinCountMapsRareTokensToUnk) {
  const std::vector<Document> docs{doc("d", {{"a", "a", "b"}})};
  const LabelCatalog labels({{"L", {"a"}, true}});
  const Vocabulary v = build_vocab(docs, labels, 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.index_of("b"), Vocabulary::kUnk);
}

TEST(BuildVocab, DigitsMapToNum) {
  const std::vector<Document> docs{doc("d", {{"in", "2015", "3.5"}})};
  const Vocabulary v = build_vocab(docs, two_labels(), 1);
  EXPECT_EQ(v.index_of("2015"), Vocabulary::kNum);
  EXPECT_EQ(v.index_of("3.5"), Vocabulary::kNum);
  EXPECT_NE(v.index_of("in"), Vocabulary::kNum);
  EXPECT_FALSE(is_number_token("1.2.3"));
  EXPECT_FALSE(is_number_token("."));
  EXPECT_FALSE(is_number_token("12a"));
}

TEST(BuildVocab, MinCountOneKeepsEveryToken) {
  const std::vector<Document> docs{doc("d", {{"a", "b"}, {"c"}})};
  const Vocabulary v = build_vocab(docs, two_labels(), 1);
  for (const auto& t : {"a", "b", "c", "alpha", "words", "beta"}) EXPECT_NE(v.index_of(t), Vocabulary::kUnk) << t;
  EXPECT_EQ(v.size(), 2u + 6u);
}

TEST(BuildVocab, LabelDescriptionsCountTowardsFrequency) {
  const std::vector<Document> docs{doc("d", {{"beta"}})};
  const Vocabulary v = build_vocab(docs, two_labels(), 2);
  EXPECT_TRUE(v.contains("beta"));
}

TEST(BuildVocab, EmptyCorpusIsAnError) { EXPECT_THROW(build_vocab({}, LabelCatalog(), 1), ConfigError); }

TEST(BuildVocab, IndependentOfDocumentOrder) {
  SynthConfig sc;
  sc.labels = 10;
  sc.docs_per_label = 5;
  sc.noise_words = 400;
  const auto corpus = synth_generate(sc);
  const Vocabulary ref = build_vocab(corpus.corpus.documents, corpus.corpus.labels, 2);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto docs = corpus.corpus.documents;
    rng.shuffle(docs);
    const Vocabulary v = build_vocab(docs, corpus.corpus.labels, 2);
    EXPECT_EQ(v, ref);
  }
}

LabelCatalog ten_labels() {
  LabelCatalog c;
  for (int i = 0; i < 10; ++i) c.add({"L" + std::to_string(i), {"w" + std::to_string(i)}, true});
  return c;
}

TEST(SplitSeenUnseen, EmptySetKeepsEverythingSeen) {
  const auto c = split_seen_unseen(ten_labels(), {});
  EXPECT_EQ(c.seen_indices().size(), 10u);
  EXPECT_TRUE(c.unseen_indices().empty());
}

TEST(SplitSeenUnseen, AllUnseenIsAnError) {
  std::set<std::string> all;
  for (int i = 0; i < 10; ++i) all.insert("L" + std::to_string(i));
  EXPECT_THROW(split_seen_unseen(ten_labels(), all), ConfigError);
}

TEST(SplitSeenUnseen, TwoOfTen) {
  const auto c = split_seen_unseen(ten_labels(), {"L3", "L7"});
  EXPECT_EQ(c.seen_indices().size(), 8u);
  EXPECT_EQ(c.unseen_indices(), (std::vector<std::size_t>{3, 7}));
}

TEST(SplitSeenUnseen, UnknownIdIsAnError) { EXPECT_THROW(split_seen_unseen(ten_labels(), {"nope"}), ReferenceError); }

TEST(SplitSeenUnseen, PartitionHoldsForRandomSplits) {
  Rng rng(21);
  const auto base = ten_labels();
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::string> unseen;
    const std::size_t n = rng.index(10);
    while (unseen.size() < n) unseen.insert("L" + std::to_string(rng.index(10)));
    const auto c = split_seen_unseen(base, unseen);
    auto s = c.seen_indices(), u = c.unseen_indices();
    std::vector<std::size_t> both;
    std::set_intersection(s.begin(), s.end(), u.begin(), u.end(), std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    EXPECT_EQ(s.size() + u.size(), base.size());
    EXPECT_EQ(u.size(), n);
  }
}

TEST(TrainingDocuments, DropsUnseenSupervisionAndEmptyDocuments) {
  const auto c = split_seen_unseen(two_labels(), {"B"});
  const std::vector<Document> docs{doc("1", {{"x"}}, {"A", "B"}), doc("2", {{"y"}}, {"B"})};
  const auto t = training_documents(docs, c);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].labels, (std::vector<std::string>{"A"}));
}

TEST(Truncate, LimitsSentenceCount) {
  Document d;
  for (int i = 0; i < 40; ++i) d.sentences.push_back({"w"});
  EXPECT_EQ(truncate(d, 30, 30).sentences.size(), 30u);
}

TEST(Truncate, ShortDocumentUnchanged) {
  const Document d = doc("d", {{"a", "b"}, {"c"}}, {"A"});
  EXPECT_EQ(truncate(d, 30, 30), d);
}

TEST(Truncate, OneByOne) {
  const Document t = truncate(doc("d", {{"a", "b"}, {"c"}}), 1, 1);
  ASSERT_EQ(t.sentences.size(), 1u);
  EXPECT_EQ(t.sentences[0], (std::vector<std::string>{"a"}));
}

TEST(IndexDocument, MapsTokensAndSortsLabels) {
  const auto labels = two_labels();
  const Vocabulary v(std::vector<std::string>{"x", "y"});
  const auto d = index_document(doc("d", {{"x", "zzz", "42"}, {"y"}}, {"B", "A"}), v, labels);
  EXPECT_EQ(d.sentences[0], (std::vector<std::size_t>{2, Vocabulary::kUnk, Vocabulary::kNum}));
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1}));
}

TEST(SaveLoad, RoundTripsGeneratedCorpora) {
  test::ScratchDir dir("roundtrip");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig sc;
    sc.seed = seed;
    sc.labels = 8;
    sc.docs_per_label = 4;
    sc.languages = {"en", "de"};
    const auto g = synth_generate(sc);
    save_corpus(dir.file("d.jsonl"), dir.file("l.jsonl"), g.corpus);
    const Corpus back = load_corpus(dir.file("d.jsonl"), dir.file("l.jsonl"));
    EXPECT_EQ(back, g.corpus);
  }
}

TEST(Manifest, SelectsDocumentsInManifestOrder) {
  test::ScratchDir dir("manifest");
  const std::vector<Document> docs{doc("a", {{"x"}}), doc("b", {{"y"}}), doc("c", {{"z"}})};
  save_manifest(dir.file("m.ids"), {docs[2], docs[0]});
  const auto sel = select_documents(docs, load_manifest(dir.file("m.ids")));
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_EQ(sel[0].id, "c");
  EXPECT_EQ(sel[1].id, "a");
  EXPECT_THROW(select_documents(docs, {"nope"}), ReferenceError);
}

}  // namespace
}  // namespace gile
