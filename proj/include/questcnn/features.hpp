#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "questcnn/corpus.hpp"
#include "questcnn/nn/array.hpp"
#include "questcnn/tokenize.hpp"

namespace questcnn {

// ---------------------------------------------------------------------------
// Statistical features

// (character count, word count, capitalized words, vocabulary coverage).
// Word tokens exclude detached punctuation; coverage is the number of
// distinct lowercased word tokens divided by vocab_size.
using SentenceStats = std::array<double, 4>;

SentenceStats statistical_features(std::string_view text, std::size_t vocab_size);
inline SentenceStats statistical_features(const LabeledSentence& s, std::size_t vocab_size) {
  return statistical_features(s.text, vocab_size);
}

// ---------------------------------------------------------------------------
// Embedding tables

// Half-width of the uniform range used for unseen words: sqrt(3 / dim).
double oov_bound(std::size_t dim);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim, std::uint64_t oov_seed = 0);

  // Every token gets an OOV-initialized row.
  static EmbeddingTable random(const std::vector<std::string>& tokens, std::size_t dim,
                               std::uint64_t oov_seed);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  std::uint64_t oov_seed() const { return oov_seed_; }
  bool trainable = true;

  std::optional<std::size_t> row_of(std::string_view token) const;
  const std::string& token(std::size_t row) const { return tokens_[row]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Appends a row; throws on duplicate token or wrong length.
  std::size_t add(std::string token, std::span<const double> vector);
  std::size_t add_oov(std::string token);

  // Deterministic function of (token, oov_seed); components in
  // [-sqrt(3/dim), +sqrt(3/dim)].
  std::vector<double> oov_vector(std::string_view token) const;
  // Stored row, or the OOV vector for unknown tokens.
  std::vector<double> lookup(std::string_view token) const;

  nn::Array2& vectors() { return vectors_; }
  const nn::Array2& vectors() const { return vectors_; }

 private:
  std::size_t dim_ = 0;
  std::uint64_t oov_seed_ = 0;
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> rows_;
  nn::Array2 vectors_;
};

// word2vec text format: header "count dim", then "token v1 ... vdim".
// expected_dim 0 accepts the header's dimension.
EmbeddingTable read_word2vec(std::istream& in, std::size_t expected_dim);
EmbeddingTable load_word2vec(const std::filesystem::path& path, std::size_t expected_dim);
void write_word2vec(std::ostream& out, const EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Semantic lexicon

enum class SemanticStrategy { replace_words, separate_channel };

std::string_view strategy_name(SemanticStrategy s);
SemanticStrategy parse_strategy(std::string_view name);

class SemanticLexicon {
 public:
  // Anatomy, Disorders, Phenomena, Procedures.
  static const std::vector<std::string>& default_groups();

  SemanticLexicon() : groups_(default_groups()) {}
  explicit SemanticLexicon(std::vector<std::string> groups) : groups_(std::move(groups)) {}

  SemanticStrategy strategy = SemanticStrategy::separate_channel;

  const std::vector<std::string>& groups() const { return groups_; }
  const std::map<std::string, std::size_t, std::less<>>& entries() const { return word_to_group_; }

  // Throws DataError if the group is not in the inventory.
  void add(std::string_view token, std::string_view group);
  std::optional<std::size_t> group_of(std::string_view token) const;  // case-insensitive
  // Lowercased group name, the token substituted under replace_words.
  std::string group_token(std::size_t group) const;

 private:
  std::vector<std::string> groups_;
  std::map<std::string, std::size_t, std::less<>> word_to_group_;
};

// "token<TAB>group" lines. An optional first line "#groups: A,B,..."
// replaces the default inventory; other '#' lines are comments.
SemanticLexicon read_lexicon_tsv(std::istream& in);
SemanticLexicon load_lexicon_tsv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// POS tagging

// Penn-style inventory; index order defines POS embedding rows and one-hot slots.
const std::vector<std::string>& pos_tagset();
std::optional<std::size_t> pos_index(std::string_view tag);

// Token list in, tag list out.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<std::string> tag(const std::vector<std::string>& tokens) const = 0;
};

// Closed-class lexicon, then suffix rules, then NN.
class HeuristicTagger final : public PosTagger {
 public:
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const override;
  static std::string tag_token(std::string_view token, bool sentence_initial);
};

const PosTagger& default_tagger();

// Runs the tagger and checks it returned one tag per token.
std::vector<std::string> pos_tag(const std::vector<std::string>& tokens,
                                 const PosTagger& tagger = default_tagger());

// ---------------------------------------------------------------------------
// Channel encoding

enum class Channel { word = 0, pos = 1, semantic = 2 };
enum class PosRepresentation { embedding, one_hot };

std::string_view channel_name(Channel c);

struct ChannelEncoding {
  static constexpr int kPad = -1;
  // Position uses a vector that is not a table row (OOV vector, one-hot, none).
  static constexpr int kNoRow = -2;

  std::vector<Channel> kinds;
  std::vector<nn::Array2> channels;  // each n x k
  std::vector<int> token_ids;        // word-table rows, length n
  std::vector<int> pos_ids;          // POS-table rows, length n
  std::vector<int> group_ids;        // group-table rows, length n
  std::size_t length = 0;            // unpadded token count
  SentenceStats stats{};

  std::size_t padded_length() const { return token_ids.size(); }
};

struct EncodeContext {
  bool use_word = true;
  const EmbeddingTable* words = nullptr;
  bool use_pos = false;
  PosRepresentation pos_representation = PosRepresentation::embedding;
  const EmbeddingTable* pos = nullptr;  // rows keyed by tag, embedding mode only
  bool use_semantic = false;
  const SemanticLexicon* lexicon = nullptr;  // its strategy selects the semantic mode
  const EmbeddingTable* groups = nullptr;  // rows keyed by group name, separate_channel only
  const PosTagger* tagger = nullptr;       // default_tagger() when null
  std::size_t max_len = 0;                 // n
  std::size_t vocab_size = 1;              // |V| for the coverage feature
};

// Word rows come from the word table (falling back to its "<unk>" row, then to
// the OOV vector); pre-computed POS tags on the sentence are used verbatim.
ChannelEncoding encode(const LabeledSentence& sentence, const EncodeContext& ctx);

// Parallel over sentences; output order matches input order.
std::vector<ChannelEncoding> encode_batch(std::span<const LabeledSentence> sentences,
                                          const EncodeContext& ctx);

}  // namespace questcnn
