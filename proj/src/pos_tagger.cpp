#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include "questcnn/errors.hpp"
#include "questcnn/features.hpp"

namespace questcnn {

const std::vector<std::string>& pos_tagset() {
  static const std::vector<std::string> tags = {
      "CC",  "CD",  "DT",   "EX",  "FW",  "IN",  "JJ",  "JJR",   "JJS",   "LS",  "MD", "NN",
      "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB",   "RBR",   "RBS", "RP", "SYM",
      "TO",  "UH",  "VB",   "VBD", "VBG", "VBN", "VBP", "VBZ",  "WDT",   "WP",  "WP$", "WRB",
      ".",   ",",   ":",    "``",  "''",  "-LRB-", "-RRB-", "#", "$",   "UNK"};
  return tags;
}

std::optional<std::size_t> pos_index(std::string_view tag) {
  const auto& tags = pos_tagset();
  auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tags.begin());
}

namespace {

const std::unordered_map<std::string, std::string>& closed_class() {
  static const std::unordered_map<std::string, std::string> lex = [] {
    std::unordered_map<std::string, std::string> m;
    auto put = [&m](std::initializer_list<const char*> words, const char* tag) {
      for (const char* w : words) m.emplace(w, tag);
    };
    put({"the", "a", "an", "this", "that", "these", "those", "every", "each", "all", "any",
         "some", "no", "another", "either", "neither"},
        "DT");
    put({"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
         "myself", "yourself", "himself", "herself", "itself", "ourselves", "themselves",
         "i'm", "im", "i'd", "i've", "i'll", "you're", "it's", "we're", "they're", "he's",
         "she's", "someone", "somebody", "anyone", "anybody", "everyone", "nobody"},
        "PRP");
    put({"my", "your", "his", "its", "our", "their"}, "PRP$");
    put({"what", "who", "whom", "whatever", "whoever"}, "WP");
    put({"whose"}, "WP$");
    put({"which", "whichever"}, "WDT");
    put({"where", "when", "why", "how", "whenever", "wherever", "however"}, "WRB");
    put({"can", "could", "will", "would", "shall", "should", "may", "might", "must", "can't",
         "cannot", "won't", "couldn't", "wouldn't", "shouldn't"},
        "MD");
    put({"is", "has", "does", "isn't", "hasn't", "doesn't", "'s"}, "VBZ");
    put({"are", "am", "have", "do", "aren't", "haven't", "don't"}, "VBP");
    put({"was", "were", "had", "did", "wasn't", "weren't", "hadn't", "didn't", "said", "made",
         "got", "went", "came", "saw", "began", "sent", "told", "gave", "took", "found"},
        "VBD");
    put({"be"}, "VB");
    put({"been", "done", "seen", "given", "taken", "begun", "known"}, "VBN");
    put({"being"}, "VBG");
    put({"to"}, "TO");
    put({"in", "on", "at", "by", "for", "with", "from", "of", "about", "into", "over", "under",
         "after", "before", "between", "through", "during", "without", "within", "against",
         "among", "as", "if", "because", "since", "while", "than", "until", "upon", "per",
         "whether", "although", "though", "unless", "via"},
        "IN");
    put({"and", "or", "but", "nor", "yet", "plus"}, "CC");
    put({"not", "n't", "very", "also", "just", "too", "again", "already", "still", "never",
         "always", "often", "here", "now", "then", "soon", "only", "even", "ever", "perhaps",
         "maybe", "there", "yet", "else", "instead", "anymore", "once", "later"},
        "RB");
    put({"please", "yes", "ok", "okay", "thanks", "hi", "hello", "oh", "hmm"}, "UH");
    put({"thing", "something", "nothing", "anything", "everything", "morning", "evening",
         "ceiling", "string", "king", "spring", "ring", "wing", "sibling", "bed", "need",
         "seed", "speed", "red", "family", "reply", "supply", "assembly", "anomaly"},
        "NN");
    put({"good", "bad", "new", "old", "high", "low", "same", "different", "other", "last",
         "next", "first", "correct", "wrong", "right", "current", "previous", "recent"},
        "JJ");
    return m;
  }();
  return lex;
}

std::string punctuation_tag(std::string_view tok) {
  if (tok == "." || tok == "?" || tok == "!") return ".";
  if (tok == ",") return ",";
  if (tok == "(" || tok == "[" || tok == "{") return "-LRB-";
  if (tok == ")" || tok == "]" || tok == "}") return "-RRB-";
  if (tok == "`") return "``";
  if (tok == "\"" || tok == "'") return "''";
  if (tok == "$") return "$";
  if (tok == "#") return "#";
  return ":";
}

bool is_number(std::string_view tok) {
  bool digit = false;
  for (unsigned char c : tok) {
    if (std::isdigit(c)) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '/' && c != '%' && c != ':') {
      return false;
    }
  }
  return digit;
}

struct SuffixRule {
  std::string_view suffix;
  std::size_t min_length;
  std::string_view tag;
};

// First match wins.
constexpr std::array<SuffixRule, 22> kSuffixRules = {{
    {"ing", 5, "VBG"},  {"ed", 4, "VBD"},    {"ly", 4, "RB"},     {"tion", 5, "NN"},
    {"sion", 5, "NN"},  {"ment", 5, "NN"},   {"ness", 5, "NN"},   {"ity", 5, "NN"},
    {"ance", 5, "NN"},  {"ence", 5, "NN"},   {"ism", 5, "NN"},    {"ist", 5, "NN"},
    {"ous", 5, "JJ"},   {"ful", 5, "JJ"},    {"able", 5, "JJ"},   {"ible", 5, "JJ"},
    {"ive", 5, "JJ"},   {"ic", 5, "JJ"},     {"al", 5, "JJ"},     {"less", 5, "JJ"},
    {"est", 5, "JJS"},  {"s", 4, "NNS"},
}};

}  // namespace

std::string HeuristicTagger::tag_token(std::string_view token, bool sentence_initial) {
  if (is_punctuation(token)) return punctuation_tag(token);
  if (is_number(token)) return "CD";

  const std::string lower = to_lower(token);
  const auto& lex = closed_class();
  if (auto it = lex.find(lower); it != lex.end()) return it->second;

  if (!sentence_initial && std::isupper(static_cast<unsigned char>(token.front())))
    return "NNP";

  for (const auto& rule : kSuffixRules) {
    if (lower.size() < rule.min_length || !lower.ends_with(rule.suffix)) continue;
    if (rule.suffix == "s" &&
        (lower.ends_with("ss") || lower.ends_with("us") || lower.ends_with("is")))
      continue;
    return std::string(rule.tag);
  }
  return "NN";
}

std::vector<std::string> HeuristicTagger::tag(const std::vector<std::string>& tokens) const {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  bool initial = true;
  for (const auto& t : tokens) {
    tags.push_back(tag_token(t, initial));
    if (!is_punctuation(t)) initial = false;
  }
  return tags;
}

const PosTagger& default_tagger() {
  static const HeuristicTagger tagger;
  return tagger;
}

std::vector<std::string> pos_tag(const std::vector<std::string>& tokens, const PosTagger& tagger) {
  if (tokens.empty()) throw UsageError("pos_tag: empty token list");
  auto tags = tagger.tag(tokens);
  if (tags.size() != tokens.size())
    throw DataError("POS tagger returned " + std::to_string(tags.size()) + " tags for " +
                    std::to_string(tokens.size()) + " tokens");
  return tags;
}

}  // namespace questcnn
