#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace questcnn {

enum class Label { question = 0, c_question = 1, non_question = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {Label::question, Label::c_question,
                                                    Label::non_question};

std::string_view label_name(Label label);
// Throws DataError for anything but "question", "c_question", "non_question".
Label parse_label(std::string_view name);

// Question sentences for rule scoring: real questions and c-questions alike.
inline bool is_question_like(Label label) { return label != Label::non_question; }

struct LabeledSentence {
  std::string id;
  std::string text;
  std::optional<Label> label;
  std::optional<std::vector<std::string>> pos_tags;
  std::optional<std::string> dialogue_id;
  std::optional<std::int64_t> position;

  bool operator==(const LabeledSentence&) const = default;
};

class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // Lowercases every token; ids follow lexicographic order after UNK, so the
  // mapping does not depend on sentence order.
  static Vocabulary build(const std::vector<LabeledSentence>& sentences);

  int id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

class Dataset {
 public:
  Dataset() = default;
  // Validates sentence invariants and builds the vocabulary.
  explicit Dataset(std::vector<LabeledSentence> sentences);

  const std::vector<LabeledSentence>& sentences() const { return sentences_; }
  const LabeledSentence& operator[](std::size_t i) const { return sentences_[i]; }
  std::size_t size() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  bool all_labeled() const;
  // Index of the sentence with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;

  bool operator==(const Dataset& other) const {
    return sentences_ == other.sentences_ && vocab_ == other.vocab_;
  }

 private:
  std::vector<LabeledSentence> sentences_;
  Vocabulary vocab_;
};

Dataset read_jsonl(std::istream& in);
Dataset load_jsonl(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, const Dataset& dataset);
void write_jsonl(const std::filesystem::path& path, const Dataset& dataset);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Shuffles under the seed, then takes floor(0.8n) for training, floor(0.1n)
// for validation and the remainder for test (n = 103 gives 82/10/11).
Split split_dataset(const Dataset& dataset, std::uint64_t seed);

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices);

struct ClassStats {
  std::string name;  // label name, "unlabeled" or "all"
  std::size_t sentences = 0;
  std::size_t ending_in_question_mark = 0;
  std::size_t containing_5w1h = 0;
  double avg_words = 0.0;
  double avg_length = 0.0;
  double avg_capitalized = 0.0;
  double avg_coverage = 0.0;
};

// One row per label present (kAllLabels order), "unlabeled" if any sentence
// lacks a label, and a final "all" row.
std::vector<ClassStats> corpus_stats(const Dataset& dataset);

void write_stats_csv(std::ostream& out, const std::vector<ClassStats>& stats);

}  // namespace questcnn
