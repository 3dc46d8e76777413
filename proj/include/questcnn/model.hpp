#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "questcnn/config.hpp"
#include "questcnn/corpus.hpp"
#include "questcnn/features.hpp"
#include "questcnn/nn/layers.hpp"
#include "questcnn/rules.hpp"

namespace questcnn {

// Optional inputs shared by training and ablation runs.
struct Resources {
  const EmbeddingTable* pretrained = nullptr;
  const SemanticLexicon* lexicon = nullptr;
  const PosTagger* tagger = nullptr;
  RuleOptions rule_options;
};

// Every trainable array except the embedding tables.
struct Weights {
  std::vector<nn::ConvBank> conv;        // one bank per filter size
  std::vector<nn::BatchNorm> conv_norm;  // one per filter size, unused when ConvNorm::none
  nn::Array2 hidden_w, hidden_b;
  nn::BatchNorm hidden_norm;
  nn::Array2 out_w, out_b;
};

struct Gradients {
  nn::Array2 word_emb, pos_emb, group_emb;
  Weights weights;
  void zero();
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_f1 = -1.0;  // -1 when not tracked
  double val_f1 = -1.0;    // -1 without a validation split
};

struct Prediction {
  std::string id;
  std::optional<Label> label;
  std::vector<double> probs;
  std::string error;  // non-empty when the sentence could not be encoded
};

class TrainedModel {
 public:
  // Fresh parameters for the given corpus; classes in kAllLabels order.
  static TrainedModel initialize(const QuestCNNConfig& cfg, const Dataset& dataset,
                                 std::vector<Label> classes, const Resources& resources = {});

  const QuestCNNConfig& config() const { return config_; }
  const std::vector<Label>& classes() const { return classes_; }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t max_len() const { return max_len_; }
  std::size_t dim() const { return words_.dim(); }
  std::size_t vocab_size() const { return vocab_size_; }
  const EmbeddingTable& word_table() const { return words_; }
  const EmbeddingTable& pos_table() const { return pos_; }
  const EmbeddingTable& group_table() const { return groups_; }
  const SemanticLexicon& lexicon() const { return lexicon_; }
  const Weights& weights() const { return weights_; }
  Weights& weights() { return weights_; }
  EmbeddingTable& word_table() { return words_; }
  EmbeddingTable& pos_table() { return pos_; }
  EmbeddingTable& group_table() { return groups_; }
  const std::array<double, 4>& stats_mean() const { return stats_mean_; }
  const std::array<double, 4>& stats_sd() const { return stats_sd_; }
  void set_stats_normalization(const std::array<double, 4>& mean, const std::array<double, 4>& sd);
  const std::vector<EpochRecord>& history() const { return history_; }
  std::vector<EpochRecord>& history() { return history_; }
  std::size_t best_epoch() const { return best_epoch_; }
  void set_best_epoch(std::size_t e) { best_epoch_ = e; }

  // Width of the vector entering the first dense layer.
  std::size_t dense_input_width() const;
  std::size_t pooled_width() const;

  EncodeContext encode_context() const;
  ChannelEncoding encode(const LabeledSentence& sentence) const;
  std::vector<double> rule_bits(const LabeledSentence& sentence) const;

  // Eval-mode class probabilities. rule_bits must be non-empty iff the
  // configuration uses rule indicators; throws UsageError on channel mismatch.
  std::vector<double> forward(const ChannelEncoding& enc,
                              std::span<const double> rule_bits = {}) const;
  std::vector<double> logits(const ChannelEncoding& enc,
                             std::span<const double> rule_bits = {}) const;

  // Mean cross-entropy of a batch. With grads non-null, accumulates the
  // gradient of that mean. Embedding rows are refreshed from the tables
  // through the encodings' row ids, so this sees current parameters.
  double loss(std::span<const ChannelEncoding* const> batch,
              std::span<const std::vector<double>* const> rules,
              std::span<const std::size_t> targets, nn::Mode mode, Rng& rng,
              Gradients* grads = nullptr);

  Gradients make_gradients() const;

  // Calls f(name, value, grad, trainable) for every parameter array in a
  // fixed order. Frozen embedding tables are reported as non-trainable.
  template <typename F>
  void visit_parameters(Gradients& g, F&& f);

  // Checkpoint support: running batch-norm statistics, in a fixed order.
  template <typename F>
  void visit_buffers(F&& f);

  // Internal constructor used by initialize() and the checkpoint loader.
  TrainedModel(QuestCNNConfig cfg, std::vector<Label> classes, std::size_t max_len,
               std::size_t vocab_size, EmbeddingTable words, EmbeddingTable pos,
               EmbeddingTable groups, SemanticLexicon lexicon, RuleOptions rule_options);

  const RuleOptions& rule_options() const { return rule_options_; }
  // Not owned and not checkpointed; null means the built-in tagger.
  void set_tagger(const PosTagger* tagger) { tagger_ = tagger; }

 private:
  struct Cache;
  void forward_batch(std::span<const nn::Channels> inputs,
                     std::span<const std::vector<double>* const> rules,
                     std::span<const SentenceStats* const> stats,
                     std::span<const std::size_t> lengths, nn::Mode mode, Rng& rng,
                     Cache& cache);
  void forward_eval(std::span<const nn::Channels> inputs,
                    std::span<const std::vector<double>* const> rules,
                    std::span<const SentenceStats* const> stats,
                    std::span<const std::size_t> lengths, nn::Array2& logits) const;
  void check_encoding(const ChannelEncoding& enc, std::span<const double> rule_bits) const;
  nn::Channels materialize(const ChannelEncoding& enc) const;

  QuestCNNConfig config_;
  std::vector<Label> classes_;
  std::size_t max_len_ = 0;
  std::size_t vocab_size_ = 1;
  EmbeddingTable words_;
  EmbeddingTable pos_;
  EmbeddingTable groups_;
  SemanticLexicon lexicon_;
  RuleOptions rule_options_;
  const PosTagger* tagger_ = nullptr;
  Weights weights_;
  std::array<double, 4> stats_mean_{0, 0, 0, 0};
  std::array<double, 4> stats_sd_{1, 1, 1, 1};
  std::vector<EpochRecord> history_;
  std::size_t best_epoch_ = 0;
};

// Label set seen on the labeled sentences at the given indices, kAllLabels order.
std::vector<Label> infer_classes(const Dataset& dataset, std::span<const std::size_t> indices);

// Mini-batch Adam on the training split, validation micro-F1 per epoch, and
// the best validation epoch's parameters restored at the end.
TrainedModel train(const QuestCNNConfig& cfg, const Dataset& dataset, const Split& split,
                   const Resources& resources = {});

TrainedModel fasttext_baseline(const QuestCNNConfig& cfg, const Dataset& dataset,
                               const Split& split, const Resources& resources = {});

// Eval mode, parallel over sentences; unencodable sentences get an error
// record and the rest of the batch proceeds.
std::vector<Prediction> predict_batch(const TrainedModel& model,
                                      std::span<const LabeledSentence> sentences);

void write_predictions_jsonl(std::ostream& out, const TrainedModel& model,
                             const std::vector<Prediction>& predictions);
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
void write_checkpoint(std::ostream& out, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);
TrainedModel read_checkpoint(std::istream& in);

// ---------------------------------------------------------------------------

template <typename F>
void TrainedModel::visit_parameters(Gradients& g, F&& f) {
  const bool emb = config_.embeddings_trainable;
  f("word_emb", words_.vectors(), g.word_emb, emb && words_.trainable);
  f("pos_emb", pos_.vectors(), g.pos_emb,
    emb && pos_.trainable && config_.pos_representation == PosRepresentation::embedding);
  f("group_emb", groups_.vectors(), g.group_emb, emb && groups_.trainable);
  for (std::size_t s = 0; s < weights_.conv.size(); ++s) {
    const std::string p = "conv" + std::to_string(s) + ".";
    f(p + "weights", weights_.conv[s].weights, g.weights.conv[s].weights, true);
    f(p + "bias", weights_.conv[s].bias, g.weights.conv[s].bias, true);
    const bool norm = config_.conv_norm != ConvNorm::none;
    f(p + "gamma", weights_.conv_norm[s].gamma, g.weights.conv_norm[s].gamma, norm);
    f(p + "beta", weights_.conv_norm[s].beta, g.weights.conv_norm[s].beta, norm);
  }
  f("hidden.weights", weights_.hidden_w, g.weights.hidden_w, true);
  f("hidden.bias", weights_.hidden_b, g.weights.hidden_b, true);
  f("hidden.gamma", weights_.hidden_norm.gamma, g.weights.hidden_norm.gamma,
    config_.hidden_batchnorm);
  f("hidden.beta", weights_.hidden_norm.beta, g.weights.hidden_norm.beta,
    config_.hidden_batchnorm);
  f("out.weights", weights_.out_w, g.weights.out_w, true);
  f("out.bias", weights_.out_b, g.weights.out_b, true);
}

template <typename F>
void TrainedModel::visit_buffers(F&& f) {
  for (std::size_t s = 0; s < weights_.conv_norm.size(); ++s) {
    const std::string p = "conv" + std::to_string(s) + ".";
    f(p + "running_mean", weights_.conv_norm[s].running_mean);
    f(p + "running_var", weights_.conv_norm[s].running_var);
  }
  f("hidden.running_mean", weights_.hidden_norm.running_mean);
  f("hidden.running_var", weights_.hidden_norm.running_var);
}

}  // namespace questcnn
