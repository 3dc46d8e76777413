#include <algorithm>
#include <fstream>
#include <istream>

#include "questcnn/errors.hpp"
#include "questcnn/features.hpp"

namespace questcnn {

std::string_view strategy_name(SemanticStrategy s) {
  return s == SemanticStrategy::replace_words ? "replace_words" : "separate_channel";
}

SemanticStrategy parse_strategy(std::string_view name) {
  if (name == "replace_words") return SemanticStrategy::replace_words;
  if (name == "separate_channel") return SemanticStrategy::separate_channel;
  throw DataError("unknown semantic strategy '" + std::string(name) + "'");
}

const std::vector<std::string>& SemanticLexicon::default_groups() {
  static const std::vector<std::string> groups = {"Anatomy", "Disorders", "Phenomena",
                                                  "Procedures"};
  return groups;
}

void SemanticLexicon::add(std::string_view token, std::string_view group) {
  auto it = std::find(groups_.begin(), groups_.end(), group);
  if (it == groups_.end())
    throw DataError("semantic group '" + std::string(group) + "' is not in the inventory");
  word_to_group_[to_lower(token)] = static_cast<std::size_t>(it - groups_.begin());
}

std::optional<std::size_t> SemanticLexicon::group_of(std::string_view token) const {
  auto it = word_to_group_.find(to_lower(token));
  if (it == word_to_group_.end()) return std::nullopt;
  return it->second;
}

std::string SemanticLexicon::group_token(std::size_t group) const {
  return to_lower(groups_.at(group));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

SemanticLexicon read_lexicon_tsv(std::istream& in) {
  SemanticLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  bool seen_entry = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      constexpr std::string_view kGroups = "#groups:";
      if (view.starts_with(kGroups)) {
        if (seen_entry)
          throw DataError("lexicon line " + std::to_string(line_no) +
                          ": #groups must precede entries");
        std::vector<std::string> groups;
        std::string_view rest = view.substr(kGroups.size());
        while (!rest.empty()) {
          auto comma = rest.find(',');
          auto item = trim(rest.substr(0, comma));
          if (!item.empty()) groups.emplace_back(item);
          if (comma == std::string_view::npos) break;
          rest.remove_prefix(comma + 1);
        }
        if (groups.empty())
          throw DataError("lexicon line " + std::to_string(line_no) + ": empty #groups list");
        lex = SemanticLexicon(std::move(groups));
      }
      continue;
    }
    auto tab = view.find('\t');
    if (tab == std::string_view::npos)
      throw DataError("lexicon line " + std::to_string(line_no) + ": expected token<TAB>group");
    auto token = trim(view.substr(0, tab));
    auto group = trim(view.substr(tab + 1));
    if (token.empty() || group.empty())
      throw DataError("lexicon line " + std::to_string(line_no) + ": empty token or group");
    try {
      lex.add(token, group);
    } catch (const DataError& e) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": " + e.what());
    }
    seen_entry = true;
  }
  return lex;
}

SemanticLexicon load_lexicon_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon '" + path.string() + "'");
  try {
    return read_lexicon_tsv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace questcnn
