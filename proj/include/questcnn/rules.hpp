#pragma once

#include <array>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "questcnn/corpus.hpp"

namespace questcnn {

// Ordering is fixed: rule-indicator vectors and report rows follow it.
enum class RuleId { QM = 0, QM_AND_5W1H, LI_RULE1, LI_RULE2, LI_RULE12, EFRON };

inline constexpr std::array<RuleId, 6> kAllRules = {RuleId::QM,       RuleId::QM_AND_5W1H,
                                                    RuleId::LI_RULE1, RuleId::LI_RULE2,
                                                    RuleId::LI_RULE12, RuleId::EFRON};

std::string_view rule_name(RuleId id);
RuleId parse_rule(std::string_view name);
// Comma separated names, or "all".
std::set<RuleId> parse_rule_set(std::string_view list);

enum class LiVariant { rule1, rule2, both };

struct RuleOptions {
  // Auxiliaries that may follow a 5W1H word for the second Li rule.
  std::vector<std::string> auxiliaries = {"is",    "are",    "was",   "were", "do",
                                          "does",  "did",    "can",   "could", "should",
                                          "would", "will",   "has",   "have",  "had"};
  // Compose the Li rules with the question-mark rule.
  bool li_include_qm = false;
};

inline const std::array<std::string_view, 6> k5W1H = {"what", "who", "where", "when", "why", "how"};

bool rule_qm(std::string_view text);
bool rule_5w1h(std::string_view text);
bool rule_li(std::string_view text, LiVariant variant, const RuleOptions& options = {});
bool rule_efron(std::string_view text);

bool apply_rule(RuleId id, std::string_view text, const RuleOptions& options = {});
// One entry per kAllRules element, 1.0 when the rule fires.
std::vector<double> rule_indicators(std::string_view text, const RuleOptions& options = {});

struct Candidate {
  std::string id;
  std::vector<RuleId> fired;  // subset of the requested rules that flagged it
};

// Union over the selected rules, in dataset order.
std::vector<Candidate> extract_candidates(const Dataset& dataset, const std::set<RuleId>& rules,
                                          const RuleOptions& options = {});
std::vector<std::string> candidate_ids(const std::vector<Candidate>& candidates);

struct RuleScore {
  RuleId rule;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::string> false_positive_ids;
  std::vector<std::string> false_negative_ids;
};

struct RuleReport {
  std::vector<RuleScore> scores;  // kAllRules order
  const RuleScore& at(RuleId id) const;
};

// Every sentence must carry a gold label; question and c_question are positive.
RuleReport evaluate_rules(const Dataset& dataset, const RuleOptions& options = {});

// Columns: Methods,Prec.,Recall,F1
void write_rule_report_csv(std::ostream& out, const RuleReport& report);
// Columns: method,kind,id
void write_rule_errors_csv(std::ostream& out, const RuleReport& report);
void write_candidates_jsonl(std::ostream& out, const std::vector<Candidate>& candidates);

}  // namespace questcnn
