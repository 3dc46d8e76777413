#include <doctest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "questcnn/corpus.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/tokenize.hpp"

using namespace questcnn;

TEST_SUITE("corpus") {

TEST_CASE("tokenizer detaches edge punctuation") {
  CHECK(tokenize("Can you clarify this?") ==
        std::vector<std::string>{"Can", "you", "clarify", "this", "?"});
  CHECK(tokenize("  (see   comments).") ==
        std::vector<std::string>{"(", "see", "comments", ")", "."});
  CHECK(tokenize("I'm done") == std::vector<std::string>{"I'm", "done"});
  CHECK(tokenize("?!") == std::vector<std::string>{"?", "!"});
  CHECK(tokenize("Whoever did this") == std::vector<std::string>{"Whoever", "did", "this"});
  CHECK(tokenize("").empty());
  CHECK(utf8_length("naïve") == 5);
}

TEST_CASE("load_jsonl reads labels and metadata") {
  std::istringstream in(
      R"({"id":"s1","text":"please see comments?","label":"non_question"})"
      "\n\n"
      R"({"id":"s2","text":"why?","dialogue_id":"d1","position":3})"
      "\n");
  const auto d = read_jsonl(in);
  REQUIRE(d.size() == 2);
  CHECK(d[0].label == Label::non_question);
  CHECK_FALSE(d[1].label.has_value());
  CHECK(d[1].dialogue_id == "d1");
  CHECK(d[1].position == 3);
}

TEST_CASE("empty file gives an empty dataset with only UNK") {
  std::istringstream in("");
  const auto d = read_jsonl(in);
  CHECK(d.size() == 0);
  CHECK(d.vocab_size() == 1);
  CHECK(d.vocab().token(Vocabulary::kUnkId) == Vocabulary::kUnkToken);
}

TEST_CASE("load errors name the problem") {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_jsonl(in);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("{\"id\":\"s1\",\"text\":\"a\"}\n{\"id\":\"s1\",\"text\":\"b\"}\n")
            .find("duplicate id") != std::string::npos);
  CHECK(message("{\"id\":\"s1\",\"text\":\"a\"}\n{oops\n").find("line 2") != std::string::npos);
  CHECK(message("{\"id\":\"s1\",\"text\":\"   \"}\n").find("empty text") != std::string::npos);
  CHECK(message("{\"id\":\"s1\",\"text\":\"a\",\"label\":\"maybe\"}\n").find("maybe") !=
        std::string::npos);
  CHECK(message("{\"id\":\"s1\",\"text\":\"a b\",\"pos_tags\":[\"DT\"]}\n").find("s1") !=
        std::string::npos);
  CHECK_THROWS_AS(load_jsonl("/nonexistent/corpus.jsonl"), DataError);
}

TEST_CASE("round trip through JSONL preserves the dataset") {
  const auto d = testing::minicorpus();
  std::vector<LabeledSentence> rows = d.sentences();
  rows[0].pos_tags = std::vector<std::string>{"VB", "VB", "NNS", "."};
  rows[1].dialogue_id = "dlg";
  rows[1].position = 4;
  const Dataset rich(rows);
  std::stringstream buf;
  write_jsonl(buf, rich);
  CHECK(read_jsonl(buf) == rich);
}

TEST_CASE("vocabulary is lowercased, sorted and order independent") {
  auto d = testing::minicorpus();
  auto rows = d.sentences();
  std::reverse(rows.begin(), rows.end());
  const Dataset reversed(rows);
  CHECK(reversed.vocab() == d.vocab());
  const auto& toks = d.vocab().tokens();
  CHECK(std::is_sorted(toks.begin() + 1, toks.end()));
  CHECK(d.vocab().id("LIVER") == d.vocab().id("liver"));
  CHECK(d.vocab().id("liver") != Vocabulary::kUnkId);
  CHECK(d.vocab().id("zebra") == Vocabulary::kUnkId);
  for (const auto& s : d.sentences())
    for (const auto& t : tokenize(s.text)) CHECK(d.vocab().contains(to_lower(t)));
}

TEST_CASE("split sizes follow floor(0.8n) / floor(0.1n) / remainder") {
  auto make = [](std::size_t n) {
    std::vector<LabeledSentence> rows;
    for (std::size_t i = 0; i < n; ++i)
      rows.push_back(testing::sentence("s" + std::to_string(i), "word" + std::to_string(i)));
    return Dataset(rows);
  };
  const auto d100 = make(100);
  auto s = split_dataset(d100, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);
  // n = 103 by hand: floor(82.4) = 82, floor(10.3) = 10, 103 - 92 = 11.
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s103 = split_dataset(make(103), seed);
    CHECK(s103.train.size() == 82);
    CHECK(s103.validation.size() == 10);
    CHECK(s103.test.size() == 11);
  }
  const auto again = split_dataset(d100, 7);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  CHECK(again.test == s.test);

  std::set<std::size_t> all;
  for (auto* part : {&s.train, &s.validation, &s.test}) all.insert(part->begin(), part->end());
  CHECK(all.size() == 100);
  CHECK(*all.rbegin() == 99);

  const auto a = split_dataset(d100, 11), b = split_dataset(d100, 12), c = split_dataset(d100, 13);
  CHECK((a.train != b.train || b.train != c.train));
  CHECK_THROWS_AS(split_dataset(make(9), 1), UsageError);
}

TEST_CASE("corpus stats for a single sentence") {
  const Dataset d({testing::sentence("a", "Can you clarify this?", Label::c_question)});
  const auto st = corpus_stats(d);
  REQUIRE(st.size() == 2);
  CHECK(st[0].name == "c_question");
  CHECK(st[0].ending_in_question_mark == 1);
  CHECK(st[0].avg_words == 4);
  CHECK(st[0].avg_length == 21);
  CHECK(st[0].avg_capitalized == 1);
  CHECK(st[1].name == "all");
}

TEST_CASE("corpus stats match the independent script on the mini-corpus") {
  std::ifstream in(testing::oracle_path("stats_minicorpus.csv"));
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  const auto stats = corpus_stats(testing::minicorpus());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string name, cell;
    std::getline(f, name, ',');
    std::vector<double> v;
    while (std::getline(f, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(row < stats.size());
    const auto& s = stats[row++];
    CHECK(s.name == name);
    CHECK(s.sentences == v[0]);
    CHECK(s.ending_in_question_mark == v[1]);
    CHECK(s.containing_5w1h == v[2]);
    CHECK(s.avg_words == doctest::Approx(v[3]).epsilon(1e-12));
    CHECK(s.avg_length == doctest::Approx(v[4]).epsilon(1e-12));
    CHECK(s.avg_capitalized == doctest::Approx(v[5]).epsilon(1e-12));
    CHECK(s.avg_coverage == doctest::Approx(v[6]).epsilon(1e-12));
  }
  CHECK(row == stats.size());
}

}  // TEST_SUITE
