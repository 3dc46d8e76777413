#include "questcnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "questcnn/errors.hpp"
#include "questcnn/eval.hpp"

namespace questcnn {

using nn::Array2;

void Gradients::zero() {
  word_emb.fill(0.0);
  pos_emb.fill(0.0);
  group_emb.fill(0.0);
  for (auto& c : weights.conv) {
    c.weights.fill(0.0);
    c.bias.fill(0.0);
  }
  for (auto& bn : weights.conv_norm) {
    bn.gamma.fill(0.0);
    bn.beta.fill(0.0);
  }
  weights.hidden_w.fill(0.0);
  weights.hidden_b.fill(0.0);
  weights.hidden_norm.gamma.fill(0.0);
  weights.hidden_norm.beta.fill(0.0);
  weights.out_w.fill(0.0);
  weights.out_b.fill(0.0);
}

// ---------------------------------------------------------------------------
// Construction

TrainedModel::TrainedModel(QuestCNNConfig cfg, std::vector<Label> classes, std::size_t max_len,
                           std::size_t vocab_size, EmbeddingTable words, EmbeddingTable pos,
                           EmbeddingTable groups, SemanticLexicon lexicon,
                           RuleOptions rule_options)
    : config_(std::move(cfg)),
      classes_(std::move(classes)),
      max_len_(max_len),
      vocab_size_(vocab_size),
      words_(std::move(words)),
      pos_(std::move(pos)),
      groups_(std::move(groups)),
      lexicon_(std::move(lexicon)),
      rule_options_(std::move(rule_options)) {
  config_.validate();
  if (classes_.size() < 2) throw UsageError("a classifier needs at least two classes");
  lexicon_.strategy = config_.semantic_strategy;
  const std::size_t k = words_.dim();
  config_.embedding_dim = k;
  if (pos_.dim() != k || groups_.dim() != k)
    throw UsageError("embedding tables must share the word dimension");

  const std::size_t classes_n = classes_.size();
  if (config_.kind == ModelKind::fasttext) {
    weights_.out_w = Array2(classes_n, k);
    weights_.out_b = Array2(1, classes_n);
    weights_.hidden_norm = nn::BatchNorm(0);
    return;
  }
  for (auto h : config_.filter_sizes) {
    if (h > max_len_)
      throw UsageError("filter size " + std::to_string(h) + " exceeds padded length " +
                       std::to_string(max_len_));
    weights_.conv.emplace_back(h, config_.channel_count(), k, config_.feature_maps);
    weights_.conv_norm.emplace_back(config_.feature_maps);
    weights_.conv_norm.back().momentum = config_.bn_momentum;
    weights_.conv_norm.back().eps = config_.bn_eps;
  }
  const std::size_t in = dense_input_width();
  const std::size_t hidden = config_.hidden_size;
  weights_.hidden_w = Array2(hidden, in);
  weights_.hidden_b = Array2(1, hidden);
  weights_.hidden_norm = nn::BatchNorm(hidden);
  weights_.hidden_norm.momentum = config_.bn_momentum;
  weights_.hidden_norm.eps = config_.bn_eps;
  weights_.out_w = Array2(classes_n, hidden);
  weights_.out_b = Array2(1, classes_n);
}

std::size_t TrainedModel::pooled_width() const {
  if (config_.kind == ModelKind::fasttext) return words_.dim();
  return config_.filter_sizes.size() * config_.feature_maps;
}

std::size_t TrainedModel::dense_input_width() const {
  if (config_.kind == ModelKind::fasttext) return words_.dim();
  return pooled_width() + (config_.use_stats ? 4 : 0) +
         (config_.use_rule_indicators ? kAllRules.size() : 0);
}

namespace {

void uniform_fill(Array2& a, double bound, Rng& rng) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-bound, bound);
}

EmbeddingTable init_table(const std::vector<std::string>& tokens, std::size_t dim,
                          std::uint64_t seed, const EmbeddingTable* pretrained) {
  EmbeddingTable t(dim, seed);
  for (const auto& tok : tokens) {
    std::optional<std::size_t> row;
    if (pretrained) {
      row = pretrained->row_of(tok);
      if (!row) row = pretrained->row_of(to_lower(tok));
    }
    if (row) t.add(tok, pretrained->vectors().row(*row));
    else t.add_oov(tok);
  }
  return t;
}

}  // namespace

TrainedModel TrainedModel::initialize(const QuestCNNConfig& cfg_in, const Dataset& dataset,
                                      std::vector<Label> classes, const Resources& res) {
  QuestCNNConfig cfg = cfg_in;
  cfg.validate();
  if (res.pretrained) cfg.embedding_dim = res.pretrained->dim();
  const std::size_t k = cfg.embedding_dim;

  std::size_t n = cfg.max_len;
  if (n == 0)
    for (const auto& s : dataset.sentences()) n = std::max(n, tokenize(s.text).size());
  if (cfg.kind == ModelKind::quest_cnn)
    n = std::max(n, *std::max_element(cfg.filter_sizes.begin(), cfg.filter_sizes.end()));
  n = std::max<std::size_t>(n, 1);

  SemanticLexicon lexicon = res.lexicon ? *res.lexicon : SemanticLexicon();
  lexicon.strategy = cfg.semantic_strategy;

  std::vector<std::string> word_tokens = dataset.vocab().tokens();
  if (cfg.use_semantic && cfg.semantic_strategy == SemanticStrategy::replace_words) {
    for (std::size_t g = 0; g < lexicon.groups().size(); ++g) {
      auto tok = lexicon.group_token(g);
      if (!dataset.vocab().contains(tok)) word_tokens.push_back(std::move(tok));
    }
  }
  const auto seed = cfg.seed;
  EmbeddingTable words = init_table(word_tokens, k, Rng::derive(seed, 10), res.pretrained);
  EmbeddingTable pos(k, Rng::derive(seed, 11));
  if (cfg.use_pos && cfg.pos_representation == PosRepresentation::embedding)
    pos = EmbeddingTable::random(pos_tagset(), k, Rng::derive(seed, 11));
  EmbeddingTable groups(k, Rng::derive(seed, 12));
  if (cfg.use_semantic && cfg.semantic_strategy == SemanticStrategy::separate_channel) {
    groups = EmbeddingTable(k, Rng::derive(seed, 12));
    for (const auto& g : lexicon.groups()) {
      std::optional<std::size_t> row;
      if (res.pretrained) row = res.pretrained->row_of(to_lower(g));
      if (row) groups.add(g, res.pretrained->vectors().row(*row));
      else groups.add_oov(g);
    }
  }

  TrainedModel m(cfg, std::move(classes), n, dataset.vocab_size(), std::move(words), std::move(pos),
                 std::move(groups), std::move(lexicon), res.rule_options);
  m.set_tagger(res.tagger);

  Rng rng(Rng::derive(seed, 1));
  Weights& w = m.weights_;
  for (auto& bank : w.conv) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(bank.fan_in()));
    uniform_fill(bank.weights, bound, rng);
    uniform_fill(bank.bias, bound, rng);
  }
  if (w.hidden_w.cols() > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.hidden_w.cols()));
    uniform_fill(w.hidden_w, bound, rng);
    uniform_fill(w.hidden_b, bound, rng);
  }
  if (!cfg.zero_init_output) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.out_w.cols()));
    uniform_fill(w.out_w, bound, rng);
    uniform_fill(w.out_b, bound, rng);
  }
  return m;
}

void TrainedModel::set_stats_normalization(const std::array<double, 4>& mean,
                                           const std::array<double, 4>& sd) {
  for (double s : sd)
    if (!(s > 0.0)) throw UsageError("statistical feature scale must be positive");
  stats_mean_ = mean;
  stats_sd_ = sd;
}

Gradients TrainedModel::make_gradients() const {
  Gradients g;
  g.word_emb = Array2(words_.vectors().rows(), words_.vectors().cols());
  g.pos_emb = Array2(pos_.vectors().rows(), pos_.vectors().cols());
  g.group_emb = Array2(groups_.vectors().rows(), groups_.vectors().cols());
  g.weights = weights_;
  g.zero();
  return g;
}

// ---------------------------------------------------------------------------
// Encoding

EncodeContext TrainedModel::encode_context() const {
  EncodeContext ctx;
  ctx.use_word = config_.use_word;
  ctx.words = &words_;
  const bool quest = config_.kind == ModelKind::quest_cnn;
  ctx.use_pos = quest && config_.use_pos;
  ctx.pos_representation = config_.pos_representation;
  ctx.pos = &pos_;
  ctx.use_semantic = quest && config_.use_semantic;
  ctx.tagger = tagger_;
  ctx.lexicon = &lexicon_;
  ctx.groups = &groups_;
  ctx.max_len = max_len_;
  ctx.vocab_size = vocab_size_;
  return ctx;
}

ChannelEncoding TrainedModel::encode(const LabeledSentence& sentence) const {
  return questcnn::encode(sentence, encode_context());
}

std::vector<double> TrainedModel::rule_bits(const LabeledSentence& sentence) const {
  if (!config_.use_rule_indicators) return {};
  return rule_indicators(sentence.text, rule_options_);
}

void TrainedModel::check_encoding(const ChannelEncoding& enc,
                                  std::span<const double> rule_bits) const {
  if (enc.kinds != config_.channel_kinds())
    throw UsageError("channel mismatch: encoding channels do not match the model configuration");
  for (const auto& m : enc.channels)
    if (m.rows() != max_len_ || m.cols() != words_.dim())
      throw UsageError("channel mismatch: expected " + std::to_string(max_len_) + "x" +
                       std::to_string(words_.dim()) + " matrices, got " + nn::shape_string(m));
  if (enc.token_ids.size() != max_len_ || enc.length > max_len_)
    throw UsageError("channel mismatch: encoding padded to a different length");
  const std::size_t want = config_.use_rule_indicators ? kAllRules.size() : 0;
  if (rule_bits.size() != want)
    throw UsageError("expected " + std::to_string(want) + " rule indicators, got " +
                     std::to_string(rule_bits.size()));
}

nn::Channels TrainedModel::materialize(const ChannelEncoding& enc) const {
  nn::Channels out = enc.channels;
  for (std::size_t c = 0; c < enc.kinds.size(); ++c) {
    const EmbeddingTable* table = nullptr;
    const std::vector<int>* ids = nullptr;
    switch (enc.kinds[c]) {
      case Channel::word: table = &words_; ids = &enc.token_ids; break;
      case Channel::pos: table = &pos_; ids = &enc.pos_ids; break;
      case Channel::semantic: table = &groups_; ids = &enc.group_ids; break;
    }
    for (std::size_t i = 0; i < ids->size(); ++i) {
      const int id = (*ids)[i];
      if (id < 0) continue;
      const auto src = table->vectors().row(static_cast<std::size_t>(id));
      std::copy(src.begin(), src.end(), out[c].row(i).begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct TrainedModel::Cache {
  std::vector<nn::Channels> x;
  std::vector<std::vector<double>> row_scale;
  std::vector<std::size_t> lengths;

  // Per filter size.
  std::vector<std::vector<Array2>> z;
  std::vector<nn::BatchNormCache> conv_bn;
  std::vector<std::vector<Array2>> act;
  std::vector<Array2> pooled_raw;                     // B x maps, before post-pool norm
  std::vector<nn::BatchNormCache> post_bn;
  std::vector<std::vector<std::size_t>> argmax;       // B * maps

  // fasttext: canonical summation order per sentence
  std::vector<std::vector<std::size_t>> order;

  Array2 feat, feat_mask, feat_drop;
  Array2 h_pre, h_norm, h_act, h_mask, h_drop;
  nn::BatchNormCache h_bn;
  Array2 logits;
};

namespace {

// Positions sorted by row contents so that summation order ignores word order.
std::vector<std::size_t> canonical_order(const Array2& m, std::size_t length) {
  std::vector<std::size_t> idx(length);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return idx;
}

}  // namespace

void TrainedModel::forward_batch(std::span<const nn::Channels> inputs,
                                 std::span<const std::vector<double>* const> rules,
                                 std::span<const SentenceStats* const> stats,
                                 std::span<const std::size_t> lengths, nn::Mode mode, Rng& rng,
                                 Cache& c) {
  const std::size_t B = inputs.size();
  const bool train = mode == nn::Mode::train;
  const Weights& w = weights_;

  c.x.assign(inputs.begin(), inputs.end());
  c.lengths.assign(lengths.begin(), lengths.end());
  c.row_scale.assign(B, {});
  for (std::size_t b = 0; b < B; ++b)
    c.row_scale[b] = nn::embedding_dropout(c.x[b], config_.embedding_dropout, mode, rng);

  if (config_.kind == ModelKind::fasttext) {
    const std::size_t k = words_.dim();
    c.feat = Array2(B, k);
    c.order.assign(B, {});
    for (std::size_t b = 0; b < B; ++b) {
      const Array2& m = c.x[b][0];
      c.order[b] = canonical_order(m, c.lengths[b]);
      auto out = c.feat.row(b);
      for (auto i : c.order[b]) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < k; ++j) out[j] += r[j];
      }
      const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(c.lengths[b], 1));
      for (auto& v : out) v *= inv;
    }
    nn::dense_forward(c.feat, w.out_w, w.out_b, c.logits);
    return;
  }

  const std::size_t S = w.conv.size();
  const std::size_t maps = config_.feature_maps;
  c.z.assign(S, {});
  c.act.assign(S, {});
  c.conv_bn.assign(S, {});
  c.post_bn.assign(S, {});
  c.pooled_raw.assign(S, Array2());
  c.argmax.assign(S, {});

  const std::size_t D = dense_input_width();
  c.feat = Array2(B, D);

  for (std::size_t s = 0; s < S; ++s) {
    nn::conv_bank_forward(c.x, w.conv[s], c.z[s]);
    std::vector<Array2> normed;
    const std::vector<Array2>* pre = &c.z[s];
    if (config_.conv_norm == ConvNorm::pre_pool) {
      if (train) nn::spatial_batchnorm_forward(c.z[s], weights_.conv_norm[s], mode, normed, &c.conv_bn[s]);
      else nn::spatial_batchnorm_forward(c.z[s], w.conv_norm[s], normed, &c.conv_bn[s]);
      pre = &normed;
    }
    c.act[s].resize(B);
    c.pooled_raw[s] = Array2(B, maps);
    c.argmax[s].assign(B * maps, 0);
    for (std::size_t b = 0; b < B; ++b) {
      c.act[s][b] = (*pre)[b];
      for (std::size_t i = 0; i < c.act[s][b].size(); ++i)
        c.act[s][b][i] = nn::activate(c.act[s][b][i], config_.conv_activation);
      for (std::size_t f = 0; f < maps; ++f) {
        const auto r = nn::maxpool_time(c.act[s][b].row(f));
        c.pooled_raw[s](b, f) = r.value;
        c.argmax[s][b * maps + f] = r.argmax;
      }
    }
    Array2 pooled = c.pooled_raw[s];
    if (config_.conv_norm == ConvNorm::post_pool) {
      if (train) nn::batchnorm_forward(c.pooled_raw[s], weights_.conv_norm[s], mode, pooled, &c.post_bn[s]);
      else nn::batchnorm_forward(c.pooled_raw[s], w.conv_norm[s], pooled, &c.post_bn[s]);
    }
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < maps; ++f) c.feat(b, s * maps + f) = pooled(b, f);
  }

  std::size_t col = S * maps;
  if (config_.use_stats) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < 4; ++j)
        c.feat(b, col + j) = ((*stats[b])[j] - stats_mean_[j]) / stats_sd_[j];
    col += 4;
  }
  if (config_.use_rule_indicators) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < kAllRules.size(); ++j) c.feat(b, col + j) = (*rules[b])[j];
  }

  c.feat_drop = nn::dropout(c.feat, config_.dropout, mode, rng, &c.feat_mask);
  nn::dense_forward(c.feat_drop, w.hidden_w, w.hidden_b, c.h_pre);
  if (config_.hidden_batchnorm) {
    if (train) nn::batchnorm_forward(c.h_pre, weights_.hidden_norm, mode, c.h_norm, &c.h_bn);
    else nn::batchnorm_forward(c.h_pre, w.hidden_norm, c.h_norm, &c.h_bn);
  } else {
    c.h_norm = c.h_pre;
  }
  c.h_act = c.h_norm;
  for (std::size_t i = 0; i < c.h_act.size(); ++i)
    c.h_act[i] = nn::activate(c.h_act[i], config_.hidden_activation);
  c.h_drop = nn::dropout(c.h_act, config_.dropout, mode, rng, &c.h_mask);
  nn::dense_forward(c.h_drop, w.out_w, w.out_b, c.logits);
}

void TrainedModel::forward_eval(std::span<const nn::Channels> inputs,
                                std::span<const std::vector<double>* const> rules,
                                std::span<const SentenceStats* const> stats,
                                std::span<const std::size_t> lengths, Array2& logits) const {
  // Eval mode reads the weights and never updates running statistics, so
  // the const_cast below does not result in a write.
  Cache cache;
  Rng unused(0);
  const_cast<TrainedModel*>(this)->forward_batch(inputs, rules, stats, lengths, nn::Mode::eval,
                                                 unused, cache);
  logits = std::move(cache.logits);
}

std::vector<double> TrainedModel::logits(const ChannelEncoding& enc,
                                         std::span<const double> rule_bits) const {
  check_encoding(enc, rule_bits);
  std::vector<double> bits(rule_bits.begin(), rule_bits.end());
  const std::vector<double>* rules[] = {&bits};
  const SentenceStats* stats[] = {&enc.stats};
  const std::size_t lengths[] = {enc.length};
  Array2 out;
  forward_eval(std::span<const nn::Channels>(&enc.channels, 1), rules, stats, lengths, out);
  auto r = out.row(0);
  return {r.begin(), r.end()};
}

std::vector<double> TrainedModel::forward(const ChannelEncoding& enc,
                                          std::span<const double> rule_bits) const {
  return nn::softmax(logits(enc, rule_bits));
}

double TrainedModel::loss(std::span<const ChannelEncoding* const> batch,
                          std::span<const std::vector<double>* const> rules,
                          std::span<const std::size_t> targets, nn::Mode mode, Rng& rng,
                          Gradients* grads) {
  const std::size_t B = batch.size();
  if (B == 0) throw UsageError("loss: empty batch");
  if (targets.size() != B || (config_.use_rule_indicators && rules.size() != B))
    throw UsageError("loss: batch, rule and target counts differ");

  std::vector<nn::Channels> inputs(B);
  std::vector<const SentenceStats*> stats(B);
  std::vector<std::size_t> lengths(B);
  static const std::vector<double> kNoRules;
  std::vector<const std::vector<double>*> rule_ptrs(B, &kNoRules);
  for (std::size_t b = 0; b < B; ++b) {
    if (config_.use_rule_indicators) rule_ptrs[b] = rules[b];
    check_encoding(*batch[b], *rule_ptrs[b]);
    inputs[b] = materialize(*batch[b]);
    stats[b] = &batch[b]->stats;
    lengths[b] = batch[b]->length;
    if (targets[b] >= classes_.size()) throw UsageError("loss: target out of range");
  }

  Cache c;
  forward_batch(inputs, rule_ptrs, stats, lengths, mode, rng, c);

  const std::size_t K = classes_.size();
  Array2 dlogits(B, K);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    total += nn::softmax_xent(c.logits.row(b), targets[b], dlogits.row(b));
  }
  const double mean = total / static_cast<double>(B);
  if (!grads) return mean;
  for (std::size_t i = 0; i < dlogits.size(); ++i) dlogits[i] /= static_cast<double>(B);

  Weights& gw = grads->weights;
  std::vector<nn::Channels> dx(B);
  for (std::size_t b = 0; b < B; ++b) {
    dx[b].resize(c.x[b].size());
    for (std::size_t ch = 0; ch < c.x[b].size(); ++ch)
      dx[b][ch] = Array2(c.x[b][ch].rows(), c.x[b][ch].cols());
  }

  if (config_.kind == ModelKind::fasttext) {
    Array2 dfeat;
    nn::dense_backward(c.feat, weights_.out_w, dlogits, gw.out_w, gw.out_b, &dfeat);
    for (std::size_t b = 0; b < B; ++b) {
      const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(c.lengths[b], 1));
      for (std::size_t i = 0; i < c.lengths[b]; ++i) {
        auto r = dx[b][0].row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = dfeat(b, j) * inv;
      }
    }
  } else {
    Array2 dh_drop;
    nn::dense_backward(c.h_drop, weights_.out_w, dlogits, gw.out_w, gw.out_b, &dh_drop);
    Array2 dh_norm(B, c.h_act.cols());
    for (std::size_t i = 0; i < dh_norm.size(); ++i)
      dh_norm[i] = dh_drop[i] * c.h_mask[i] *
                   nn::activation_grad_from_output(c.h_act[i], config_.hidden_activation);
    Array2 dh_pre;
    if (config_.hidden_batchnorm) {
      nn::batchnorm_backward(c.h_bn, weights_.hidden_norm, dh_norm, dh_pre, gw.hidden_norm.gamma,
                             gw.hidden_norm.beta);
    } else {
      dh_pre = dh_norm;
    }
    Array2 dfeat_drop;
    nn::dense_backward(c.feat_drop, weights_.hidden_w, dh_pre, gw.hidden_w, gw.hidden_b,
                       &dfeat_drop);

    const std::size_t maps = config_.feature_maps;
    for (std::size_t s = 0; s < weights_.conv.size(); ++s) {
      Array2 dpooled(B, maps);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < maps; ++f) {
          const std::size_t col = s * maps + f;
          dpooled(b, f) = dfeat_drop(b, col) * c.feat_mask(b, col);
        }
      Array2 draw = dpooled;
      if (config_.conv_norm == ConvNorm::post_pool)
        nn::batchnorm_backward(c.post_bn[s], weights_.conv_norm[s], dpooled, draw,
                               gw.conv_norm[s].gamma, gw.conv_norm[s].beta);

      std::vector<Array2> dpre(B);
      for (std::size_t b = 0; b < B; ++b) {
        dpre[b] = Array2(maps, c.act[s][b].cols());
        for (std::size_t f = 0; f < maps; ++f) {
          const std::size_t at = c.argmax[s][b * maps + f];
          dpre[b](f, at) = draw(b, f) * nn::activation_grad_from_output(c.act[s][b](f, at),
                                                                        config_.conv_activation);
        }
      }
      std::vector<Array2> dz;
      if (config_.conv_norm == ConvNorm::pre_pool) {
        nn::spatial_batchnorm_backward(c.conv_bn[s], weights_.conv_norm[s], dpre, dz,
                                       gw.conv_norm[s].gamma, gw.conv_norm[s].beta);
      } else {
        dz = std::move(dpre);
      }
      nn::conv_bank_backward(c.x, weights_.conv[s], dz, gw.conv[s], &dx);
    }
  }

  // Through embedding dropout, then scatter into the tables.
  for (std::size_t b = 0; b < B; ++b) {
    const ChannelEncoding& enc = *batch[b];
    for (std::size_t ch = 0; ch < enc.kinds.size(); ++ch) {
      Array2* target = nullptr;
      const std::vector<int>* ids = nullptr;
      switch (enc.kinds[ch]) {
        case Channel::word: target = &grads->word_emb; ids = &enc.token_ids; break;
        case Channel::pos: target = &grads->pos_emb; ids = &enc.pos_ids; break;
        case Channel::semantic: target = &grads->group_emb; ids = &enc.group_ids; break;
      }
      for (std::size_t i = 0; i < ids->size(); ++i) {
        const int id = (*ids)[i];
        if (id < 0) continue;
        const double scale = c.row_scale[b][i];
        auto src = dx[b][ch].row(i);
        auto dst = target->row(static_cast<std::size_t>(id));
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j] * scale;
      }
    }
  }
  return mean;
}

// ---------------------------------------------------------------------------
// Training

std::vector<Label> infer_classes(const Dataset& dataset, std::span<const std::size_t> indices) {
  std::vector<Label> out;
  for (Label l : kAllLabels) {
    for (auto i : indices)
      if (dataset[i].label == l) {
        out.push_back(l);
        break;
      }
  }
  return out;
}

namespace {

std::size_t class_index(const std::vector<Label>& classes, Label l) {
  auto it = std::find(classes.begin(), classes.end(), l);
  if (it == classes.end())
    throw DataError("label '" + std::string(label_name(l)) + "' is not a model class");
  return static_cast<std::size_t>(it - classes.begin());
}

struct Snapshot {
  Array2 words, pos, groups;
  Weights weights;
};

Snapshot take_snapshot(const TrainedModel& m) {
  return {m.word_table().vectors(), m.pos_table().vectors(), m.group_table().vectors(),
          m.weights()};
}

void restore(TrainedModel& m, Snapshot&& s) {
  m.word_table().vectors() = std::move(s.words);
  m.pos_table().vectors() = std::move(s.pos);
  m.group_table().vectors() = std::move(s.groups);
  m.weights() = std::move(s.weights);
}

bool uses_batchnorm(const QuestCNNConfig& cfg) {
  return cfg.kind == ModelKind::quest_cnn &&
         (cfg.conv_norm != ConvNorm::none || cfg.hidden_batchnorm);
}

}  // namespace

TrainedModel train(const QuestCNNConfig& cfg, const Dataset& dataset, const Split& split,
                   const Resources& resources) {
  cfg.validate();
  if (split.train.empty()) throw UsageError("train: empty training split");
  for (const auto* part : {&split.train, &split.validation})
    for (auto i : *part) {
      if (i >= dataset.size()) throw UsageError("train: split index out of range");
      if (!dataset[i].label)
        throw DataError("train: sentence '" + dataset[i].id + "' has no label");
    }

  std::vector<std::size_t> labeled = split.train;
  labeled.insert(labeled.end(), split.validation.begin(), split.validation.end());
  auto classes = infer_classes(dataset, labeled);
  if (classes.size() < 2) throw DataError("train: need at least two distinct labels");

  TrainedModel model = TrainedModel::initialize(cfg, dataset, classes, resources);
  const QuestCNNConfig& mc = model.config();

  if (mc.use_stats) {
    std::array<double, 4> mean{}, sd{};
    for (auto i : split.train) {
      const auto st = statistical_features(dataset[i].text, dataset.vocab_size());
      for (std::size_t j = 0; j < 4; ++j) mean[j] += st[j];
    }
    const double n = static_cast<double>(split.train.size());
    for (auto& v : mean) v /= n;
    for (auto i : split.train) {
      const auto st = statistical_features(dataset[i].text, dataset.vocab_size());
      for (std::size_t j = 0; j < 4; ++j) sd[j] += (st[j] - mean[j]) * (st[j] - mean[j]);
    }
    for (auto& v : sd) {
      v = std::sqrt(v / n);
      if (!(v > 1e-12)) v = 1.0;
    }
    model.set_stats_normalization(mean, sd);
  }

  const auto encodings = encode_batch(dataset.sentences(), model.encode_context());
  std::vector<std::vector<double>> rules(dataset.size());
  if (mc.use_rule_indicators)
    for (std::size_t i = 0; i < dataset.size(); ++i) rules[i] = model.rule_bits(dataset[i]);
  std::vector<std::size_t> targets(dataset.size(), 0);
  for (auto i : labeled) targets[i] = class_index(classes, *dataset[i].label);

  std::vector<nn::Array2*> params;
  std::vector<const nn::Array2*> grad_ptrs;
  Gradients grads = model.make_gradients();
  model.visit_parameters(grads, [&](const std::string&, nn::Array2& v, nn::Array2& g, bool trainable) {
    if (!trainable) return;
    params.push_back(&v);
    grad_ptrs.push_back(&g);
  });
  nn::AdamState adam;
  adam.lr = mc.lr;

  auto batch_accuracy = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> gold, pred;
    Rng unused(0);
    for (auto i : idx) {
      const auto enc = model.encode(dataset[i]);
      const auto p = model.forward(enc, rules[i]);
      gold.push_back(targets[i]);
      pred.push_back(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
    }
    return compute_metrics(gold, pred, classes.size()).micro_f1;
  };

  // Batches of one cannot be normalized; fold a trailing singleton into the
  // previous batch.
  const bool bn = uses_batchnorm(mc);
  if (bn && split.train.size() < 2)
    throw UsageError("train: batch normalization needs at least two training sentences");

  Rng rng(Rng::derive(mc.seed, 2));
  std::optional<Snapshot> best;
  double best_val = -1.0;
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 1; epoch <= mc.epochs; ++epoch) {
    rng.shuffle(order);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t start = 0; start < order.size(); start += mc.batch_size)
      ranges.emplace_back(start, std::min(order.size(), start + mc.batch_size));
    if (bn && ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
      ranges.pop_back();
      ranges.back().second = order.size();
    }

    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
      std::vector<const ChannelEncoding*> encs;
      std::vector<const std::vector<double>*> rule_ptrs;
      std::vector<std::size_t> tgt;
      for (std::size_t p = ranges[bi].first; p < ranges[bi].second; ++p) {
        encs.push_back(&encodings[order[p]]);
        rule_ptrs.push_back(&rules[order[p]]);
        tgt.push_back(targets[order[p]]);
      }
      grads.zero();
      const double l = model.loss(encs, rule_ptrs, tgt, nn::Mode::train, rng, &grads);
      bool finite = std::isfinite(l);
      for (const auto* g : grad_ptrs) finite = finite && g->all_finite();
      if (!finite)
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(bi + 1));
      nn::adam_step(params, grad_ptrs, adam);
      epoch_loss += l * static_cast<double>(encs.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    if (!split.validation.empty()) rec.val_f1 = batch_accuracy(split.validation);
    if (mc.stop_at_train_f1 > 0.0) rec.train_f1 = batch_accuracy(split.train);
    model.history().push_back(rec);

    if (!split.validation.empty() && rec.val_f1 > best_val) {
      best_val = rec.val_f1;
      best = take_snapshot(model);
      model.set_best_epoch(epoch);
    }
    if (mc.stop_at_train_f1 > 0.0 && rec.train_f1 >= mc.stop_at_train_f1) break;
  }

  if (best) {
    restore(model, std::move(*best));
  } else {
    model.set_best_epoch(model.history().size());
  }
  return model;
}

TrainedModel fasttext_baseline(const QuestCNNConfig& cfg, const Dataset& dataset,
                               const Split& split, const Resources& resources) {
  return train(fasttext_config(cfg), dataset, split, resources);
}

// ---------------------------------------------------------------------------
// Prediction

std::vector<Prediction> predict_batch(const TrainedModel& model,
                                      std::span<const LabeledSentence> sentences) {
  std::vector<Prediction> out(sentences.size());
  const auto n = static_cast<std::ptrdiff_t>(sentences.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& s = sentences[static_cast<std::size_t>(i)];
    Prediction& p = out[static_cast<std::size_t>(i)];
    p.id = s.id;
    try {
      const auto enc = model.encode(s);
      p.probs = model.forward(enc, model.rule_bits(s));
      const auto best = std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin();
      p.label = model.classes()[static_cast<std::size_t>(best)];
    } catch (const std::exception& e) {
      p.error = e.what();
      p.probs.clear();
    }
  }
  return out;
}

}  // namespace questcnn
