#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/rules.hpp"

using namespace questcnn;

TEST_SUITE("rules") {

TEST_CASE("question mark rule") {
  CHECK(rule_qm("please see comments?"));
  CHECK_FALSE(rule_qm("what symptoms did the patient present."));
  CHECK(rule_qm("?"));
  CHECK(rule_qm("is it new?  \t\n"));
  CHECK_FALSE(rule_qm("? not at the end"));
}

TEST_CASE("5W1H rule") {
  CHECK(rule_5w1h("just wait and see what happens"));
  CHECK_FALSE(rule_5w1h("please see comments"));
  CHECK_FALSE(rule_5w1h("Whoever did this"));
  CHECK(rule_5w1h("WHY?"));
}

TEST_CASE("Li rules") {
  CHECK(rule_li("what is the baseline value", LiVariant::rule2));
  CHECK(rule_li("how does this work", LiVariant::rule2));
  CHECK_FALSE(rule_li("tell me what happened", LiVariant::rule1));
  CHECK_FALSE(rule_li("tell me what happened", LiVariant::rule2));
  CHECK(rule_li("Where was it", LiVariant::rule1));
  CHECK(rule_li("\"Where was it", LiVariant::rule1));
  CHECK_FALSE(rule_li("just wait and see what happens", LiVariant::both));
  CHECK_FALSE(rule_li("is it new?", LiVariant::both));

  RuleOptions with_qm;
  with_qm.li_include_qm = true;
  CHECK(rule_li("is it new?", LiVariant::both, with_qm));

  RuleOptions custom;
  custom.auxiliaries = {"happened"};
  CHECK(rule_li("tell me what happened", LiVariant::rule2, custom));

  for (const auto& s : testing::minicorpus().sentences())
    CHECK(rule_li(s.text, LiVariant::both) ==
          (rule_li(s.text, LiVariant::rule1) || rule_li(s.text, LiVariant::rule2)));
}

TEST_CASE("Efron rule") {
  CHECK(rule_efron("I need to know the target weight"));
  CHECK(rule_efron("please see comments?"));
  CHECK_FALSE(rule_efron("I tried to understand"));
  CHECK(rule_efron("i'm trying to find the old film"));
  CHECK(rule_efron("Im like to know"));
  CHECK_FALSE(rule_efron("it needs to know"));
  CHECK_FALSE(rule_efron("in need to find"));
}

TEST_CASE("rule names round trip") {
  for (RuleId r : kAllRules) CHECK(parse_rule(rule_name(r)) == r);
  CHECK_THROWS_AS(parse_rule("QQ"), UsageError);
  CHECK(parse_rule_set("all").size() == kAllRules.size());
  CHECK(parse_rule_set("QM, EFRON") == std::set<RuleId>{RuleId::QM, RuleId::EFRON});
}

TEST_CASE("candidate extraction") {
  const auto d = testing::minicorpus();
  CHECK_THROWS_AS(extract_candidates(d, {}), UsageError);

  const auto qm = candidate_ids(extract_candidates(d, {RuleId::QM}));
  std::vector<std::string> ending;
  for (const auto& s : d.sentences())
    if (rule_qm(s.text)) ending.push_back(s.id);
  CHECK(qm == ending);

  const auto both = candidate_ids(extract_candidates(d, {RuleId::QM, RuleId::EFRON}));
  for (const auto& id : qm) CHECK(std::find(both.begin(), both.end(), id) != both.end());

  // Frozen list from the independent script.
  std::ifstream in(testing::oracle_path("candidates_minicorpus.txt"));
  REQUIRE(in);
  std::vector<std::string> expected;
  for (std::string line; std::getline(in, line);) expected.push_back(line);
  CHECK(candidate_ids(extract_candidates(d, parse_rule_set("all"))) == expected);
}

TEST_CASE("rule report matches the brute-force script exactly") {
  const auto report = evaluate_rules(testing::minicorpus());
  std::ifstream in(testing::oracle_path("rules_minicorpus.csv"));
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string name, tp, fp, fn, p, r, f1;
    std::getline(f, name, ',');
    std::getline(f, tp, ',');
    std::getline(f, fp, ',');
    std::getline(f, fn, ',');
    std::getline(f, p, ',');
    std::getline(f, r, ',');
    std::getline(f, f1, ',');
    const auto& s = report.at(parse_rule(name));
    CHECK(s.true_positives == std::stoul(tp));
    CHECK(s.false_positives == std::stoul(fp));
    CHECK(s.false_negatives == std::stoul(fn));
    CHECK(s.precision == std::stod(p));
    CHECK(s.recall == std::stod(r));
    CHECK(s.f1 == std::stod(f1));
    ++rows;
  }
  CHECK(rows == kAllRules.size());
}

TEST_CASE("report invariants") {
  const auto d = testing::minicorpus();
  const auto report = evaluate_rules(d);
  for (const auto& s : report.scores) {
    CHECK(s.false_positive_ids.size() == s.false_positives);
    CHECK(s.false_negative_ids.size() == s.false_negatives);
    const double pr = s.precision + s.recall;
    CHECK(s.f1 == doctest::Approx(pr > 0 ? 2 * s.precision * s.recall / pr : 0.0));
  }

  std::vector<LabeledSentence> unlabeled = d.sentences();
  unlabeled[3].label.reset();
  CHECK_THROWS_AS(evaluate_rules(Dataset(unlabeled)), DataError);
}

TEST_CASE("degenerate rules") {
  // Everything ends in '?': QM flags all, recall 1 and precision = positive rate.
  const Dataset all_q({testing::sentence("a", "x?", Label::question),
                       testing::sentence("b", "y?", Label::non_question),
                       testing::sentence("c", "z?", Label::non_question),
                       testing::sentence("d", "w?", Label::c_question)});
  const auto& s = evaluate_rules(all_q).at(RuleId::QM);
  CHECK(s.recall == 1.0);
  CHECK(s.precision == 0.5);
  // Nothing matches the Li rules.
  const auto& li = evaluate_rules(all_q).at(RuleId::LI_RULE12);
  CHECK(li.precision == 0.0);
  CHECK(li.recall == 0.0);
  CHECK(li.f1 == 0.0);
}

TEST_CASE("report CSV uses three decimals") {
  std::ostringstream out;
  write_rule_report_csv(out, evaluate_rules(testing::minicorpus()));
  const auto text = out.str();
  CHECK(text.rfind("Methods,Prec.,Recall,F1\nQM,", 0) == 0);
  CHECK(text.find("LI_RULE2,1.000,") != std::string::npos);
}

}  // TEST_SUITE
