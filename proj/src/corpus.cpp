#include "questcnn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "questcnn/errors.hpp"
#include "questcnn/features.hpp"
#include "questcnn/rng.hpp"
#include "questcnn/rules.hpp"
#include "questcnn/tokenize.hpp"

namespace questcnn {

using json = nlohmann::ordered_json;

std::string_view label_name(Label label) {
  switch (label) {
    case Label::question: return "question";
    case Label::c_question: return "c_question";
    case Label::non_question: return "non_question";
  }
  return "?";
}

Label parse_label(std::string_view name) {
  for (Label l : kAllLabels)
    if (label_name(l) == name) return l;
  throw DataError("unknown label '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnkToken);
  ids_.emplace(std::string(kUnkToken), kUnkId);
}

Vocabulary Vocabulary::build(const std::vector<LabeledSentence>& sentences) {
  std::set<std::string> seen;
  for (const auto& s : sentences)
    for (const auto& tok : tokenize(s.text)) seen.insert(to_lower(tok));
  seen.erase(std::string(kUnkToken));

  Vocabulary v;
  for (const auto& tok : seen) {
    v.ids_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end() && std::any_of(token.begin(), token.end(), [](unsigned char c) { return std::isupper(c); }))
    it = ids_.find(to_lower(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.find(token) != ids_.end(); }

// ---------------------------------------------------------------------------

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void validate_sentence(const LabeledSentence& s) {
  if (s.id.empty()) throw DataError("sentence id is empty");
  if (blank(s.text)) throw DataError("sentence '" + s.id + "' has empty text");
  if (s.pos_tags) {
    const auto n = tokenize(s.text).size();
    if (s.pos_tags->size() != n)
      throw DataError("sentence '" + s.id + "' has " + std::to_string(s.pos_tags->size()) +
                      " POS tags for " + std::to_string(n) + " tokens");
  }
}

}  // namespace

Dataset::Dataset(std::vector<LabeledSentence> sentences) : sentences_(std::move(sentences)) {
  std::set<std::string, std::less<>> ids;
  for (const auto& s : sentences_) {
    validate_sentence(s);
    if (!ids.insert(s.id).second) throw DataError("duplicate id '" + s.id + "'");
  }
  vocab_ = Vocabulary::build(sentences_);
}

bool Dataset::all_labeled() const {
  return std::all_of(sentences_.begin(), sentences_.end(),
                     [](const LabeledSentence& s) { return s.label.has_value(); });
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  for (std::size_t i = 0; i < sentences_.size(); ++i)
    if (sentences_[i].id == id) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

LabeledSentence parse_line(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where + "expected a JSON object");

  auto get_string = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw DataError(where + "field '" + key + "' must be a string");
    return it->get<std::string>();
  };

  LabeledSentence s;
  auto id = get_string("id");
  if (!id) throw DataError(where + "missing field 'id'");
  auto text = get_string("text");
  if (!text) throw DataError(where + "missing field 'text'");
  s.id = *id;
  s.text = *text;
  if (auto label = get_string("label")) {
    try {
      s.label = parse_label(*label);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  if (auto it = j.find("pos_tags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(where + "field 'pos_tags' must be an array");
    std::vector<std::string> tags;
    for (const auto& t : *it) {
      if (!t.is_string()) throw DataError(where + "POS tags must be strings");
      tags.push_back(t.get<std::string>());
    }
    s.pos_tags = std::move(tags);
  }
  s.dialogue_id = get_string("dialogue_id");
  if (auto it = j.find("position"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
      throw DataError(where + "field 'position' must be a non-negative integer");
    s.position = it->get<std::int64_t>();
  }
  try {
    validate_sentence(s);
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  }
  return s;
}

}  // namespace

Dataset read_jsonl(std::istream& in) {
  std::vector<LabeledSentence> sentences;
  std::set<std::string, std::less<>> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    auto s = parse_line(line, line_no);
    if (!ids.insert(s.id).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
    sentences.push_back(std::move(s));
  }
  return Dataset(std::move(sentences));
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus '" + path.string() + "'");
  try {
    return read_jsonl(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_jsonl(std::ostream& out, const Dataset& dataset) {
  for (const auto& s : dataset.sentences()) {
    json j;
    j["id"] = s.id;
    j["text"] = s.text;
    if (s.label) j["label"] = std::string(label_name(*s.label));
    if (s.pos_tags) j["pos_tags"] = *s.pos_tags;
    if (s.dialogue_id) j["dialogue_id"] = *s.dialogue_id;
    if (s.position) j["position"] = *s.position;
    out << j.dump() << '\n';
  }
}

void write_jsonl(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_jsonl(out, dataset);
}

// ---------------------------------------------------------------------------

Split split_dataset(const Dataset& dataset, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 10) throw UsageError("split needs at least 10 sentences, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;

  Split split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  std::vector<LabeledSentence> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(dataset[i]);
  return Dataset(std::move(out));
}

// ---------------------------------------------------------------------------

std::vector<ClassStats> corpus_stats(const Dataset& dataset) {
  if (dataset.empty()) throw UsageError("corpus_stats: dataset is empty");

  const std::size_t vsize = dataset.vocab_size();
  auto accumulate = [&](std::string name, auto&& keep) {
    ClassStats st;
    st.name = std::move(name);
    for (const auto& s : dataset.sentences()) {
      if (!keep(s)) continue;
      ++st.sentences;
      if (rule_qm(s.text)) ++st.ending_in_question_mark;
      if (rule_5w1h(s.text)) ++st.containing_5w1h;
      const auto f = statistical_features(s.text, vsize);
      st.avg_length += f[0];
      st.avg_words += f[1];
      st.avg_capitalized += f[2];
      st.avg_coverage += f[3];
    }
    if (st.sentences > 0) {
      const double n = static_cast<double>(st.sentences);
      st.avg_length /= n;
      st.avg_words /= n;
      st.avg_capitalized /= n;
      st.avg_coverage /= n;
    }
    return st;
  };

  std::vector<ClassStats> rows;
  for (Label l : kAllLabels) {
    auto st = accumulate(std::string(label_name(l)),
                         [l](const LabeledSentence& s) { return s.label == l; });
    if (st.sentences > 0) rows.push_back(std::move(st));
  }
  auto unlabeled =
      accumulate("unlabeled", [](const LabeledSentence& s) { return !s.label.has_value(); });
  if (unlabeled.sentences > 0) rows.push_back(std::move(unlabeled));
  rows.push_back(accumulate("all", [](const LabeledSentence&) { return true; }));
  return rows;
}

void write_stats_csv(std::ostream& out, const std::vector<ClassStats>& stats) {
  out << "class,sentences,ending_in_question_mark,containing_5w1h,avg_words,avg_length,"
         "avg_capitalized,avg_coverage\n";
  out << std::setprecision(10);
  for (const auto& s : stats) {
    out << s.name << ',' << s.sentences << ',' << s.ending_in_question_mark << ','
        << s.containing_5w1h << ',' << s.avg_words << ',' << s.avg_length << ','
        << s.avg_capitalized << ',' << s.avg_coverage << '\n';
  }
}

}  // namespace questcnn
