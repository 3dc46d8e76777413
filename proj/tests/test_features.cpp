#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/features.hpp"

using namespace questcnn;

TEST_SUITE("features") {

TEST_CASE("statistical features by hand") {
  // 21 characters, 4 words (the '?' is detached), one capitalized, 4 distinct.
  const auto s = statistical_features("Can you clarify this?", 10000);
  CHECK(s[0] == 21);
  CHECK(s[1] == 4);
  CHECK(s[2] == 1);
  CHECK(s[3] == 4.0 / 10000);
  const auto one = statistical_features("word", 1);
  CHECK(one[2] == 0);
  CHECK(one[3] == 1.0);
  CHECK(statistical_features("the the The", 100)[3] == 1.0 / 100);
  CHECK_THROWS_AS(statistical_features("x", 0), UsageError);
}

TEST_CASE("coverage never exceeds word count over |V|") {
  const auto d = testing::minicorpus();
  for (const auto& s : d.sentences()) {
    const auto f = statistical_features(s, d.vocab_size());
    CHECK(f[3] <= f[1] / static_cast<double>(d.vocab_size()));
    CHECK(f[3] >= 0.0);
    CHECK(f[3] <= 1.0);
  }
}

TEST_CASE("OOV vectors are bounded and deterministic") {
  CHECK(oov_bound(300) == 0.1);
  EmbeddingTable t(300, 9);
  const auto a = t.oov_vector("zebra");
  CHECK(a == t.oov_vector("zebra"));
  CHECK(a != t.oov_vector("zebras"));
  CHECK(a != EmbeddingTable(300, 10).oov_vector("zebra"));
  for (double x : a) CHECK(std::abs(x) <= 0.1);
}

TEST_CASE("word2vec reader") {
  std::istringstream in("3 2\nliver 0.5 -1\nkidney 1e-2 2\n</s> 0 0\n");
  auto t = read_word2vec(in, 0);
  CHECK(t.dim() == 2);
  CHECK(t.size() == 3);
  CHECK_FALSE(t.trainable);
  CHECK(t.lookup("kidney") == std::vector<double>{0.01, 2.0});
  CHECK(t.lookup("spleen") == t.oov_vector("spleen"));

  std::stringstream buf;
  write_word2vec(buf, t);
  const auto back = read_word2vec(buf, 2);
  CHECK(back.vectors() == t.vectors());
  CHECK(back.tokens() == t.tokens());

  auto fails = [](const std::string& text, std::size_t dim, const std::string& needle) {
    std::istringstream s(text);
    try {
      read_word2vec(s, dim);
    } catch (const DataError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails("2 2\na 1 2\n", 0, "2"));               // too few rows
  CHECK(fails("1 2\na 1 x\n", 0, "line 2"));          // bad number
  CHECK(fails("1 3\na 1 2 3\n", 2, "dimension"));     // wrong expected dim
  CHECK(fails("2 2\na 1 2\na 3 4\n", 0, "duplicate"));
  CHECK(fails("1 2\na 1 2 3\n", 0, "line 2"));
  CHECK_THROWS_AS(load_word2vec("/nonexistent.txt", 0), DataError);
}

TEST_CASE("bundled demo embeddings load") {
  const auto t = load_word2vec(testing::data_path("demo_embeddings.txt"), 0);
  CHECK(t.size() <= 1000);
  CHECK(t.row_of("liver").has_value());
}

TEST_CASE("semantic lexicon") {
  std::istringstream in("# comment\nLiver\tAnatomy\nhernia\tDisorders\n");
  const auto lex = read_lexicon_tsv(in);
  CHECK(lex.groups() == SemanticLexicon::default_groups());
  CHECK(lex.group_of("LIVER") == 0u);
  CHECK(lex.group_of("hernia") == 1u);
  CHECK_FALSE(lex.group_of("spleen").has_value());
  CHECK(lex.group_token(0) == "anatomy");

  std::istringstream custom("#groups: Body, Illness\nliver\tBody\n");
  CHECK(read_lexicon_tsv(custom).groups() == std::vector<std::string>{"Body", "Illness"});
  std::istringstream bad("liver\tOrgans\n");
  CHECK_THROWS_WITH_AS(read_lexicon_tsv(bad), doctest::Contains("line 1"), DataError);
  std::istringstream no_tab("liver Anatomy\n");
  CHECK_THROWS_AS(read_lexicon_tsv(no_tab), DataError);
  CHECK(load_lexicon_tsv(testing::data_path("semantic_lexicon.tsv")).group_of("hernia") == 1u);
}

TEST_CASE("heuristic POS tagger") {
  const auto tags = default_tagger().tag(tokenize("Is the hernia growing quickly?"));
  CHECK(tags == std::vector<std::string>{"VBZ", "DT", "NN", "VBG", "RB", "."});
  CHECK(HeuristicTagger::tag_token("bakoing", false) == "VBG");
  CHECK(HeuristicTagger::tag_token("bako", false) == "NN");
  CHECK(HeuristicTagger::tag_token("42", false) == "CD");
  CHECK(HeuristicTagger::tag_token("Boston", false) == "NNP");
  for (const auto& t : tags) CHECK(pos_index(t).has_value());
  CHECK(pos_tagset().size() == 46);
}

struct Fixture {
  Dataset d{{testing::sentence("a", "Is the hernia new?"),
             testing::sentence("b", "the liver is fine")}};
  EmbeddingTable words = EmbeddingTable::random(d.vocab().tokens(), 8, 3);
  EmbeddingTable pos = EmbeddingTable::random(pos_tagset(), 8, 4);
  SemanticLexicon lex;
  EmbeddingTable groups = EmbeddingTable::random(SemanticLexicon::default_groups(), 8, 5);

  Fixture() {
    lex.add("hernia", "Disorders");
    lex.add("liver", "Anatomy");
  }

  EncodeContext ctx(std::size_t n = 7) {
    EncodeContext c;
    c.words = &words;
    c.use_pos = true;
    c.pos = &pos;
    c.use_semantic = true;
    c.lexicon = &lex;
    c.groups = &groups;
    c.max_len = n;
    c.vocab_size = d.vocab_size();
    return c;
  }
};

TEST_CASE_FIXTURE(Fixture, "encode builds padded channel matrices") {
  const auto enc = encode(d[0], ctx());
  REQUIRE(enc.channels.size() == 3);
  CHECK(enc.kinds == std::vector<Channel>{Channel::word, Channel::pos, Channel::semantic});
  CHECK(enc.length == 5);
  CHECK(enc.padded_length() == 7);
  for (const auto& m : enc.channels) {
    CHECK(m.rows() == 7);
    CHECK(m.cols() == 8);
    for (std::size_t i = 5; i < 7; ++i)
      for (double v : m.row(i)) CHECK(v == 0.0);
  }
  // Word rows come from the table by lowercased token.
  const auto row = *words.row_of("is");
  CHECK(enc.token_ids[0] == static_cast<int>(row));
  CHECK(std::equal(enc.channels[0].row(0).begin(), enc.channels[0].row(0).end(),
                   words.vectors().row(row).begin()));
  // Semantic channel: hernia (position 2) maps to Disorders, "the" to nothing.
  CHECK(enc.group_ids[2] == static_cast<int>(*groups.row_of("Disorders")));
  CHECK(enc.group_ids[1] == ChannelEncoding::kPad);
  for (double v : enc.channels[2].row(1)) CHECK(v == 0.0);
  CHECK(enc.stats == statistical_features(d[0], d.vocab_size()));
}

TEST_CASE_FIXTURE(Fixture, "replace_words substitutes the group token and drops the channel") {
  lex.strategy = SemanticStrategy::replace_words;
  words.add_oov("disorders");
  const auto enc = encode(d[0], ctx());
  CHECK(enc.kinds == std::vector<Channel>{Channel::word, Channel::pos});
  CHECK(enc.token_ids[2] == static_cast<int>(*words.row_of("disorders")));
}

TEST_CASE_FIXTURE(Fixture, "one-hot POS rows") {
  EmbeddingTable wide = EmbeddingTable::random(d.vocab().tokens(), 50, 3);
  auto c = ctx();
  c.words = &wide;
  c.use_semantic = false;
  c.pos_representation = PosRepresentation::one_hot;
  const auto enc = encode(d[0], c);
  const auto& m = enc.channels[1];
  for (std::size_t i = 0; i < enc.length; ++i) {
    double sum = 0;
    for (double v : m.row(i)) sum += v;
    CHECK(sum == 1.0);
  }
  CHECK(m(0, *pos_index("VBZ")) == 1.0);
  // k = 8 cannot hold 46 one-hot slots.
  auto narrow = ctx();
  narrow.pos_representation = PosRepresentation::one_hot;
  CHECK_THROWS_AS(encode(d[0], narrow), UsageError);
}

TEST_CASE_FIXTURE(Fixture, "pre-computed POS tags are used verbatim") {
  auto s = d[1];
  s.pos_tags = std::vector<std::string>{"DT", "NN", "VBZ", "JJ"};
  const auto enc = encode(s, ctx());
  CHECK(enc.pos_ids[3] == static_cast<int>(*pos.row_of("JJ")));
}

TEST_CASE_FIXTURE(Fixture, "encode rejects sentences longer than n") {
  CHECK_THROWS_AS(encode(d[0], ctx(4)), UsageError);
  CHECK_THROWS_AS(encode_batch(d.sentences(), ctx(4)), UsageError);
  const auto batch = encode_batch(d.sentences(), ctx());
  REQUIRE(batch.size() == 2);
  CHECK(batch[1].channels[0] == encode(d[1], ctx()).channels[0]);
}

}  // TEST_SUITE
