#include "questcnn/rules.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "questcnn/errors.hpp"
#include "questcnn/tokenize.hpp"

namespace questcnn {

std::string_view rule_name(RuleId id) {
  switch (id) {
    case RuleId::QM: return "QM";
    case RuleId::QM_AND_5W1H: return "QM_AND_5W1H";
    case RuleId::LI_RULE1: return "LI_RULE1";
    case RuleId::LI_RULE2: return "LI_RULE2";
    case RuleId::LI_RULE12: return "LI_RULE12";
    case RuleId::EFRON: return "EFRON";
  }
  return "?";
}

RuleId parse_rule(std::string_view name) {
  for (RuleId r : kAllRules)
    if (rule_name(r) == name) return r;
  throw UsageError("unknown rule '" + std::string(name) + "'");
}

std::set<RuleId> parse_rule_set(std::string_view list) {
  std::set<RuleId> out;
  if (list == "all") return {kAllRules.begin(), kAllRules.end()};
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    auto item = list.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.insert(parse_rule(item));
    start = comma + 1;
  }
  return out;
}

namespace {

std::vector<std::string> lower_tokens(std::string_view text) {
  auto toks = tokenize(text);
  for (auto& t : toks) t = to_lower(t);
  return toks;
}

bool is_5w1h(std::string_view tok) {
  return std::find(k5W1H.begin(), k5W1H.end(), tok) != k5W1H.end();
}

bool li_rule1(const std::vector<std::string>& toks) {
  for (const auto& t : toks) {
    if (is_punctuation(t)) continue;
    return is_5w1h(t);
  }
  return false;
}

bool li_rule2(const std::vector<std::string>& toks, const RuleOptions& options) {
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (!is_5w1h(toks[i])) continue;
    const auto& next = toks[i + 1];
    if (std::find(options.auxiliaries.begin(), options.auxiliaries.end(), next) !=
        options.auxiliaries.end())
      return true;
  }
  return false;
}

bool efron_pattern(const std::vector<std::string>& toks) {
  static const std::array<std::string_view, 5> kSelf = {"i", "i'm", "i'd", "i've", "im"};
  for (std::size_t i = 0; i + 3 < toks.size(); ++i) {
    if (std::find(kSelf.begin(), kSelf.end(), toks[i]) == kSelf.end()) continue;
    const auto& verb = toks[i + 1];
    if (!(verb.starts_with("try") || verb == "like" || verb == "need")) continue;
    if (toks[i + 2] != "to") continue;
    if (toks[i + 3] == "find" || toks[i + 3] == "know") return true;
  }
  return false;
}

}  // namespace

bool rule_qm(std::string_view text) {
  for (auto it = text.rbegin(); it != text.rend(); ++it) {
    if (std::isspace(static_cast<unsigned char>(*it))) continue;
    return *it == '?';
  }
  return false;
}

bool rule_5w1h(std::string_view text) {
  const auto toks = lower_tokens(text);
  return std::any_of(toks.begin(), toks.end(), [](const std::string& t) { return is_5w1h(t); });
}

bool rule_li(std::string_view text, LiVariant variant, const RuleOptions& options) {
  if (options.li_include_qm && rule_qm(text)) return true;
  const auto toks = lower_tokens(text);
  switch (variant) {
    case LiVariant::rule1: return li_rule1(toks);
    case LiVariant::rule2: return li_rule2(toks, options);
    case LiVariant::both: return li_rule1(toks) || li_rule2(toks, options);
  }
  return false;
}

bool rule_efron(std::string_view text) {
  return rule_qm(text) || efron_pattern(lower_tokens(text));
}

bool apply_rule(RuleId id, std::string_view text, const RuleOptions& options) {
  switch (id) {
    case RuleId::QM: return rule_qm(text);
    case RuleId::QM_AND_5W1H: return rule_qm(text) || rule_5w1h(text);
    case RuleId::LI_RULE1: return rule_li(text, LiVariant::rule1, options);
    case RuleId::LI_RULE2: return rule_li(text, LiVariant::rule2, options);
    case RuleId::LI_RULE12: return rule_li(text, LiVariant::both, options);
    case RuleId::EFRON: return rule_efron(text);
  }
  return false;
}

std::vector<double> rule_indicators(std::string_view text, const RuleOptions& options) {
  std::vector<double> bits;
  bits.reserve(kAllRules.size());
  for (RuleId r : kAllRules) bits.push_back(apply_rule(r, text, options) ? 1.0 : 0.0);
  return bits;
}

// ---------------------------------------------------------------------------

std::vector<Candidate> extract_candidates(const Dataset& dataset, const std::set<RuleId>& rules,
                                          const RuleOptions& options) {
  if (rules.empty()) throw UsageError("extract_candidates: empty rule set");
  const auto& sentences = dataset.sentences();
  const auto n = static_cast<std::ptrdiff_t>(sentences.size());
  std::vector<std::vector<RuleId>> fired(sentences.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (RuleId r : rules)
      if (apply_rule(r, sentences[static_cast<std::size_t>(i)].text, options))
        fired[static_cast<std::size_t>(i)].push_back(r);
  }

  std::vector<Candidate> out;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (!fired[i].empty()) out.push_back({sentences[i].id, std::move(fired[i])});
  return out;
}

std::vector<std::string> candidate_ids(const std::vector<Candidate>& candidates) {
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const auto& c : candidates) ids.push_back(c.id);
  return ids;
}

// ---------------------------------------------------------------------------

const RuleScore& RuleReport::at(RuleId id) const {
  for (const auto& s : scores)
    if (s.rule == id) return s;
  throw UsageError("rule not in report");
}

RuleReport evaluate_rules(const Dataset& dataset, const RuleOptions& options) {
  const auto& sentences = dataset.sentences();
  for (const auto& s : sentences)
    if (!s.label) throw DataError("evaluate_rules: sentence '" + s.id + "' has no gold label");

  const std::size_t n = sentences.size();
  const std::size_t r = kAllRules.size();
  std::vector<char> flags(n * r, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    for (std::size_t k = 0; k < r; ++k)
      flags[idx * r + k] = apply_rule(kAllRules[k], sentences[idx].text, options) ? 1 : 0;
  }

  RuleReport report;
  for (std::size_t k = 0; k < r; ++k) {
    RuleScore score;
    score.rule = kAllRules[k];
    for (std::size_t i = 0; i < n; ++i) {
      const bool predicted = flags[i * r + k] != 0;
      const bool gold = is_question_like(*sentences[i].label);
      if (predicted && gold) {
        ++score.true_positives;
      } else if (predicted) {
        ++score.false_positives;
        score.false_positive_ids.push_back(sentences[i].id);
      } else if (gold) {
        ++score.false_negatives;
        score.false_negative_ids.push_back(sentences[i].id);
      }
    }
    const double tp = static_cast<double>(score.true_positives);
    const double flagged = tp + static_cast<double>(score.false_positives);
    const double positives = tp + static_cast<double>(score.false_negatives);
    score.precision = flagged > 0 ? tp / flagged : 0.0;
    score.recall = positives > 0 ? tp / positives : 0.0;
    const double pr = score.precision + score.recall;
    score.f1 = pr > 0 ? 2.0 * score.precision * score.recall / pr : 0.0;
    report.scores.push_back(std::move(score));
  }
  return report;
}

void write_rule_report_csv(std::ostream& out, const RuleReport& report) {
  out << "Methods,Prec.,Recall,F1\n" << std::fixed << std::setprecision(3);
  for (const auto& s : report.scores)
    out << rule_name(s.rule) << ',' << s.precision << ',' << s.recall << ',' << s.f1 << '\n';
  out << std::defaultfloat;
}

void write_rule_errors_csv(std::ostream& out, const RuleReport& report) {
  out << "method,kind,id\n";
  for (const auto& s : report.scores) {
    for (const auto& id : s.false_positive_ids)
      out << rule_name(s.rule) << ",false_positive," << id << '\n';
    for (const auto& id : s.false_negative_ids)
      out << rule_name(s.rule) << ",false_negative," << id << '\n';
  }
}

void write_candidates_jsonl(std::ostream& out, const std::vector<Candidate>& candidates) {
  for (const auto& c : candidates) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    auto rules = nlohmann::ordered_json::array();
    for (RuleId r : c.fired) rules.push_back(std::string(rule_name(r)));
    j["rules"] = std::move(rules);
    out << j.dump() << '\n';
  }
}

}  // namespace questcnn
