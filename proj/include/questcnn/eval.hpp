#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "questcnn/config.hpp"
#include "questcnn/corpus.hpp"
#include "questcnn/model.hpp"

namespace questcnn {

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;               // gold count per class
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
};

// Labels are class indices in [0, num_classes). Zero denominators give 0.
MetricsReport compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                              std::size_t num_classes, std::vector<std::string> class_names = {});

// Columns: class,precision,recall,f1,support, then a "micro" row.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
// Rows are gold classes, columns predicted classes.
void write_confusion_csv(std::ostream& out, const MetricsReport& report);

// Gold labels of the sentences must be in the model's class list.
MetricsReport evaluate_model(const TrainedModel& model, const Dataset& dataset,
                             std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// Hyperparameter search

struct HpoBounds {
  std::vector<std::size_t> batch_sizes = {32, 64};
  double dropout_min = 0.0, dropout_max = 0.5;
  double embedding_dropout_min = 0.0, embedding_dropout_max = 0.2;
  double lr_min = 1e-6, lr_max = 1e-1;  // log-uniform
  std::vector<std::vector<std::size_t>> filter_size_options = {{2, 3, 4}, {3, 4, 5}, {2, 4, 8}};
  std::size_t feature_maps_min = 100, feature_maps_max = 200;
  std::size_t hidden_min = 40, hidden_max = 100;
};

QuestCNNConfig sample_config(const HpoBounds& bounds, const QuestCNNConfig& base, Rng& rng);
bool within_bounds(const QuestCNNConfig& cfg, const HpoBounds& bounds);

struct HpoTrial {
  std::size_t index = 0;
  QuestCNNConfig config;
  double val_f1 = 0.0;
  double runtime_s = 0.0;
};

// Returns the validation micro-F1 of one configuration.
using TrialEvaluator = std::function<double(const QuestCNNConfig&)>;

// Configs are sampled serially from the seed (trial i also gets a derived
// training seed), evaluated in parallel, and ranked by validation F1
// (ties by trial index).
std::vector<HpoTrial> hpo_search(const HpoBounds& bounds, const QuestCNNConfig& base,
                                 std::size_t trials, std::uint64_t seed,
                                 const TrialEvaluator& evaluate);

// Columns: rank,trial,val_f1,batch_size,lr,dropout,embedding_dropout,filter_sizes,feature_maps,hidden_size,seed
void write_trials_csv(std::ostream& out, const std::vector<HpoTrial>& ranked);

// ---------------------------------------------------------------------------
// Expected validation performance

struct EvpPoint {
  std::size_t trials = 0;
  double mean = 0.0;
  double sd = 0.0;
};

enum class EvpMethod { automatic, exact, bootstrap };

// Expected best validation score among j trials drawn without replacement
// from the observed list, j = 1..N. `automatic` uses the exact order-statistic
// formula for N <= 10 and `resamples` random orderings otherwise. Both are
// monotone in j and end at the maximum.
std::vector<EvpPoint> expected_validation_performance(std::span<const double> scores,
                                                      EvpMethod method = EvpMethod::automatic,
                                                      std::size_t resamples = 1000,
                                                      std::uint64_t seed = 0);
std::vector<EvpPoint> expected_validation_performance(const std::vector<HpoTrial>& trials,
                                                      EvpMethod method = EvpMethod::automatic,
                                                      std::size_t resamples = 1000,
                                                      std::uint64_t seed = 0);

void write_evp_csv(std::ostream& out, const std::vector<EvpPoint>& curve);

// ---------------------------------------------------------------------------
// Ablations and model comparison

struct NamedConfig {
  std::string name;
  QuestCNNConfig config;
};

struct AblationRow {
  std::string name;
  double test_f1 = 0.0;
  double val_f1 = 0.0;
};

// CNN-rand, CNN-static and CNN-non-static (the latter two only with
// pre-trained vectors), each channel combination, statistical features
// on/off, both semantic strategies, one-hot POS and rule indicators.
std::vector<NamedConfig> default_ablation_matrix(const QuestCNNConfig& base, bool have_pretrained);

std::vector<AblationRow> run_ablation(const Dataset& dataset, const Split& split,
                                      const std::vector<NamedConfig>& matrix,
                                      const Resources& resources = {});

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

struct ComparisonRow {
  std::string model;
  double test_mean = 0.0, test_sd = 0.0;
  double val_mean = 0.0, val_sd = 0.0;
  std::vector<double> test_f1, val_f1;  // per seed
};

// Trains each named configuration once per seed on the same split.
std::vector<ComparisonRow> compare_models(const Dataset& dataset, const Split& split,
                                          const std::vector<NamedConfig>& models,
                                          std::span<const std::uint64_t> seeds,
                                          const Resources& resources = {});

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

// Population mean / standard deviation.
double mean_of(std::span<const double> xs);
double sd_of(std::span<const double> xs);

}  // namespace questcnn
