#include "questcnn/features.hpp"

#include <cctype>
#include <set>

#include "questcnn/errors.hpp"

namespace questcnn {

SentenceStats statistical_features(std::string_view text, std::size_t vocab_size) {
  if (vocab_size == 0) throw UsageError("statistical_features: vocabulary size is zero");
  const auto tokens = tokenize(text);
  std::size_t words = 0;
  std::size_t capitalized = 0;
  std::set<std::string> distinct;
  for (const auto& t : tokens) {
    if (is_punctuation(t)) continue;
    ++words;
    if (std::isupper(static_cast<unsigned char>(t.front()))) ++capitalized;
    distinct.insert(to_lower(t));
  }
  return {static_cast<double>(utf8_length(text)), static_cast<double>(words),
          static_cast<double>(capitalized),
          static_cast<double>(distinct.size()) / static_cast<double>(vocab_size)};
}

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::word: return "word";
    case Channel::pos: return "pos";
    case Channel::semantic: return "semantic";
  }
  return "?";
}

namespace {

void copy_row(nn::Array2& m, std::size_t r, std::span<const double> v) {
  std::copy(v.begin(), v.end(), m.row(r).begin());
}

}  // namespace

ChannelEncoding encode(const LabeledSentence& sentence, const EncodeContext& ctx) {
  if (!ctx.words) throw UsageError("encode: word table is required");
  const std::size_t k = ctx.words->dim();
  const std::size_t n = ctx.max_len;
  const auto tokens = tokenize(sentence.text);
  if (tokens.size() > n)
    throw UsageError("sentence '" + sentence.id + "' has " + std::to_string(tokens.size()) +
                     " tokens, more than the padded length " + std::to_string(n));

  const bool semantic = ctx.use_semantic && ctx.lexicon != nullptr;
  const bool replace = semantic && ctx.lexicon->strategy == SemanticStrategy::replace_words;
  const bool separate = semantic && !replace;
  if (ctx.use_semantic && !ctx.lexicon) throw UsageError("encode: semantic channel needs a lexicon");
  if (separate && (!ctx.groups || ctx.groups->dim() != k))
    throw UsageError("encode: separate semantic channel needs a group table of width k");
  if (ctx.use_pos && ctx.pos_representation == PosRepresentation::embedding &&
      (!ctx.pos || ctx.pos->dim() != k))
    throw UsageError("encode: POS embedding table of width k required");
  if (ctx.use_pos && ctx.pos_representation == PosRepresentation::one_hot &&
      pos_tagset().size() > k)
    throw UsageError("encode: one-hot POS needs k >= " + std::to_string(pos_tagset().size()) +
                     " (k = " + std::to_string(k) + ")");

  ChannelEncoding enc;
  enc.length = tokens.size();
  enc.token_ids.assign(n, ChannelEncoding::kPad);
  enc.pos_ids.assign(n, ChannelEncoding::kPad);
  enc.group_ids.assign(n, ChannelEncoding::kPad);
  enc.stats = statistical_features(sentence.text, ctx.vocab_size);

  std::vector<std::optional<std::size_t>> groups(tokens.size());
  if (semantic)
    for (std::size_t i = 0; i < tokens.size(); ++i) groups[i] = ctx.lexicon->group_of(tokens[i]);

  if (ctx.use_word) {
    nn::Array2 m(n, k);
    const auto unk = ctx.words->row_of(Vocabulary::kUnkToken);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::string key = to_lower(tokens[i]);
      if (replace && groups[i]) key = ctx.lexicon->group_token(*groups[i]);
      auto row = ctx.words->row_of(key);
      if (!row) row = unk;
      if (row) {
        enc.token_ids[i] = static_cast<int>(*row);
        copy_row(m, i, ctx.words->vectors().row(*row));
      } else {
        enc.token_ids[i] = ChannelEncoding::kNoRow;
        copy_row(m, i, ctx.words->oov_vector(key));
      }
    }
    enc.kinds.push_back(Channel::word);
    enc.channels.push_back(std::move(m));
  }

  if (ctx.use_pos) {
    std::vector<std::string> tags;
    if (sentence.pos_tags) {
      tags = *sentence.pos_tags;
      if (tags.size() != tokens.size())
        throw DataError("sentence '" + sentence.id + "': POS tag count does not match tokens");
    } else if (!tokens.empty()) {
      tags = pos_tag(tokens, ctx.tagger ? *ctx.tagger : default_tagger());
    }
    nn::Array2 m(n, k);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (ctx.pos_representation == PosRepresentation::one_hot) {
        const auto idx = pos_index(tags[i]).value_or(*pos_index("UNK"));
        m(i, idx) = 1.0;
        enc.pos_ids[i] = ChannelEncoding::kNoRow;
      } else {
        auto row = ctx.pos->row_of(tags[i]);
        if (!row) row = ctx.pos->row_of("UNK");
        if (row) {
          enc.pos_ids[i] = static_cast<int>(*row);
          copy_row(m, i, ctx.pos->vectors().row(*row));
        } else {
          enc.pos_ids[i] = ChannelEncoding::kNoRow;
          copy_row(m, i, ctx.pos->oov_vector(tags[i]));
        }
      }
    }
    enc.kinds.push_back(Channel::pos);
    enc.channels.push_back(std::move(m));
  }

  if (separate) {
    nn::Array2 m(n, k);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!groups[i]) continue;
      const auto& name = ctx.lexicon->groups()[*groups[i]];
      if (auto row = ctx.groups->row_of(name)) {
        enc.group_ids[i] = static_cast<int>(*row);
        copy_row(m, i, ctx.groups->vectors().row(*row));
      } else {
        enc.group_ids[i] = ChannelEncoding::kNoRow;
        copy_row(m, i, ctx.groups->oov_vector(name));
      }
    }
    enc.kinds.push_back(Channel::semantic);
    enc.channels.push_back(std::move(m));
  }
  return enc;
}

std::vector<ChannelEncoding> encode_batch(std::span<const LabeledSentence> sentences,
                                          const EncodeContext& ctx) {
  std::vector<ChannelEncoding> out(sentences.size());
  const auto n = static_cast<std::ptrdiff_t>(sentences.size());
  // Exceptions cannot cross the parallel region; rethrow the first one after.
  std::vector<std::string> errors(sentences.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = encode(sentences[idx], ctx);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw UsageError(e);
  return out;
}

}  // namespace questcnn
