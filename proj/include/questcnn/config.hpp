#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "questcnn/features.hpp"
#include "questcnn/nn/layers.hpp"

namespace questcnn {

enum class ModelKind { quest_cnn, fasttext };
// Where spatial batch norm sits relative to max pooling.
enum class ConvNorm { none, pre_pool, post_pool };

std::string_view model_kind_name(ModelKind k);
std::string_view conv_norm_name(ConvNorm n);

// Defaults are the tuned Quest-CNN hyperparameters.
struct QuestCNNConfig {
  ModelKind kind = ModelKind::quest_cnn;

  bool use_word = true;
  bool use_pos = true;
  bool use_semantic = true;
  SemanticStrategy semantic_strategy = SemanticStrategy::separate_channel;
  PosRepresentation pos_representation = PosRepresentation::embedding;

  std::vector<std::size_t> filter_sizes = {3, 4, 5};
  std::size_t feature_maps = 160;  // per filter size
  std::size_t hidden_size = 96;
  double dropout = 0.164;
  double embedding_dropout = 0.016;
  bool use_stats = true;
  bool use_rule_indicators = false;
  bool embeddings_trainable = true;

  double lr = 0.012;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;

  // k; replaced by the pre-trained table's dimension when one is supplied.
  std::size_t embedding_dim = 300;
  // n; 0 means the longest sentence of the training corpus.
  std::size_t max_len = 0;

  nn::Activation conv_activation = nn::Activation::relu;
  nn::Activation hidden_activation = nn::Activation::relu;
  ConvNorm conv_norm = ConvNorm::pre_pool;
  bool hidden_batchnorm = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  // Start the output layer at zero (uniform predictions before training).
  bool zero_init_output = false;
  // Stop once training micro-F1 reaches this value (0 disables).
  double stop_at_train_f1 = 0.0;

  // Throws UsageError naming the offending field.
  void validate() const;
  // Number of channel matrices fed to the convolution.
  std::size_t channel_count() const;
  std::vector<Channel> channel_kinds() const;

  bool operator==(const QuestCNNConfig&) const = default;
};

// Word channel only, no statistical features or rule indicators.
QuestCNNConfig kim_cnn_config(QuestCNNConfig base);
// Kim-CNN with its own tuned hyperparameters (batch 64, filters 2/4/8,
// 164 maps, lr 0.003, dropout 0.077).
QuestCNNConfig kim_cnn_tuned_config(QuestCNNConfig base);
// Averaged word vectors into a single dense softmax layer.
QuestCNNConfig fasttext_config(QuestCNNConfig base);

// "key = value" lines; '#' starts a comment. Unknown keys and bad values
// raise DataError naming the key.
void apply_setting(QuestCNNConfig& cfg, std::string_view key, std::string_view value);
QuestCNNConfig read_config(std::istream& in, QuestCNNConfig base = {});
QuestCNNConfig load_config(const std::filesystem::path& path, QuestCNNConfig base = {});
std::vector<std::pair<std::string, std::string>> config_entries(const QuestCNNConfig& cfg);
void write_config(std::ostream& out, const QuestCNNConfig& cfg);

}  // namespace questcnn
