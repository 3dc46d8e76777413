#include "questcnn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "questcnn/errors.hpp"

namespace questcnn {

// ---------------------------------------------------------------------------
// Metrics

namespace {

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

MetricsReport compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                              std::size_t num_classes, std::vector<std::string> class_names) {
  if (gold.size() != pred.size()) throw UsageError("compute_metrics: gold and predicted differ in length");
  if (num_classes == 0) throw UsageError("compute_metrics: no classes");
  if (class_names.empty())
    for (std::size_t c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  if (class_names.size() != num_classes) throw UsageError("compute_metrics: wrong number of class names");

  MetricsReport r;
  r.class_names = std::move(class_names);
  r.n = gold.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= num_classes || pred[i] >= num_classes)
      throw UsageError("compute_metrics: class index out of range");
    ++r.confusion[gold[i]][pred[i]];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = r.confusion[c][c], gold_c = 0, pred_c = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      gold_c += r.confusion[c][o];
      pred_c += r.confusion[o][c];
    }
    correct += tp;
    const double p = safe_div(static_cast<double>(tp), static_cast<double>(pred_c));
    const double rc = safe_div(static_cast<double>(tp), static_cast<double>(gold_c));
    r.precision.push_back(p);
    r.recall.push_back(rc);
    r.f1.push_back(safe_div(2 * p * rc, p + rc));
    r.support.push_back(gold_c);
  }
  // Single-label multi-class: micro precision = micro recall = accuracy.
  r.accuracy = safe_div(static_cast<double>(correct), static_cast<double>(r.n));
  r.micro_f1 = r.accuracy;
  return r;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "class,precision,recall,f1,support\n" << std::fixed << std::setprecision(4);
  for (std::size_t c = 0; c < r.class_names.size(); ++c)
    out << csv_field(r.class_names[c]) << ',' << r.precision[c] << ',' << r.recall[c] << ','
        << r.f1[c] << ',' << r.support[c] << '\n';
  out << "micro," << r.micro_f1 << ',' << r.micro_f1 << ',' << r.micro_f1 << ',' << r.n << '\n';
  out.unsetf(std::ios::floatfield);
}

void write_confusion_csv(std::ostream& out, const MetricsReport& r) {
  out << "gold\\predicted";
  for (const auto& n : r.class_names) out << ',' << csv_field(n);
  out << '\n';
  for (std::size_t g = 0; g < r.class_names.size(); ++g) {
    out << csv_field(r.class_names[g]);
    for (auto v : r.confusion[g]) out << ',' << v;
    out << '\n';
  }
}

MetricsReport evaluate_model(const TrainedModel& model, const Dataset& dataset,
                             std::span<const std::size_t> indices) {
  std::vector<LabeledSentence> sentences;
  std::vector<std::size_t> gold;
  for (auto i : indices) {
    if (i >= dataset.size()) throw UsageError("evaluate_model: index out of range");
    const auto& s = dataset[i];
    if (!s.label) throw DataError("evaluate_model: sentence '" + s.id + "' has no label");
    auto it = std::find(model.classes().begin(), model.classes().end(), *s.label);
    if (it == model.classes().end())
      throw DataError("evaluate_model: label '" + std::string(label_name(*s.label)) +
                      "' of sentence '" + s.id + "' is not a model class");
    gold.push_back(static_cast<std::size_t>(it - model.classes().begin()));
    sentences.push_back(s);
  }
  const auto preds = predict_batch(model, sentences);
  std::vector<std::size_t> pred;
  for (const auto& p : preds) {
    if (!p.error.empty()) throw DataError("evaluate_model: sentence '" + p.id + "': " + p.error);
    auto it = std::find(model.classes().begin(), model.classes().end(), *p.label);
    pred.push_back(static_cast<std::size_t>(it - model.classes().begin()));
  }
  std::vector<std::string> names;
  for (auto l : model.classes()) names.emplace_back(label_name(l));
  return compute_metrics(gold, pred, model.num_classes(), std::move(names));
}

// ---------------------------------------------------------------------------
// Hyperparameter search

QuestCNNConfig sample_config(const HpoBounds& b, const QuestCNNConfig& base, Rng& rng) {
  if (b.batch_sizes.empty() || b.filter_size_options.empty())
    throw UsageError("hpo: empty choice list in bounds");
  if (!(b.lr_min > 0.0 && b.lr_max >= b.lr_min)) throw UsageError("hpo: bad learning-rate bounds");
  QuestCNNConfig c = base;
  c.batch_size = b.batch_sizes[rng.below(b.batch_sizes.size())];
  c.dropout = rng.uniform(b.dropout_min, b.dropout_max);
  c.embedding_dropout = rng.uniform(b.embedding_dropout_min, b.embedding_dropout_max);
  c.lr = std::exp(rng.uniform(std::log(b.lr_min), std::log(b.lr_max)));
  c.filter_sizes = b.filter_size_options[rng.below(b.filter_size_options.size())];
  c.feature_maps = static_cast<std::size_t>(rng.between(
      static_cast<long long>(b.feature_maps_min), static_cast<long long>(b.feature_maps_max)));
  c.hidden_size = static_cast<std::size_t>(
      rng.between(static_cast<long long>(b.hidden_min), static_cast<long long>(b.hidden_max)));
  // exp(log(x)) can land an ulp outside the interval.
  c.lr = std::clamp(c.lr, b.lr_min, b.lr_max);
  return c;
}

bool within_bounds(const QuestCNNConfig& c, const HpoBounds& b) {
  return std::find(b.batch_sizes.begin(), b.batch_sizes.end(), c.batch_size) != b.batch_sizes.end() &&
         c.dropout >= b.dropout_min && c.dropout <= b.dropout_max &&
         c.embedding_dropout >= b.embedding_dropout_min &&
         c.embedding_dropout <= b.embedding_dropout_max && c.lr >= b.lr_min && c.lr <= b.lr_max &&
         std::find(b.filter_size_options.begin(), b.filter_size_options.end(), c.filter_sizes) !=
             b.filter_size_options.end() &&
         c.feature_maps >= b.feature_maps_min && c.feature_maps <= b.feature_maps_max &&
         c.hidden_size >= b.hidden_min && c.hidden_size <= b.hidden_max;
}

std::vector<HpoTrial> hpo_search(const HpoBounds& bounds, const QuestCNNConfig& base,
                                 std::size_t trials, std::uint64_t seed,
                                 const TrialEvaluator& evaluate) {
  if (trials == 0) throw UsageError("hpo: need at least one trial");
  Rng rng(seed);
  std::vector<HpoTrial> out(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    out[i].index = i;
    out[i].config = sample_config(bounds, base, rng);
    out[i].config.seed = Rng::derive(seed, 1000 + i);
  }
  std::vector<std::string> errors(trials);
  const auto n = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    const auto start = std::chrono::steady_clock::now();
    try {
      t.val_f1 = evaluate(t.config);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
    t.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  for (std::size_t i = 0; i < trials; ++i)
    if (!errors[i].empty()) throw NumericError("hpo trial " + std::to_string(i) + ": " + errors[i]);
  std::stable_sort(out.begin(), out.end(), [](const HpoTrial& a, const HpoTrial& b) {
    if (a.val_f1 != b.val_f1) return a.val_f1 > b.val_f1;
    return a.index < b.index;
  });
  return out;
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "/" : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<HpoTrial>& ranked) {
  out << "rank,trial,val_f1,batch_size,lr,dropout,embedding_dropout,filter_sizes,feature_maps,"
         "hidden_size,seed\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& t = ranked[r];
    const auto& c = t.config;
    out << r + 1 << ',' << t.index << ',' << std::fixed << std::setprecision(4) << t.val_f1 << ','
        << c.batch_size << ',' << std::scientific << std::setprecision(6) << c.lr << ','
        << std::fixed << std::setprecision(4) << c.dropout << ',' << c.embedding_dropout << ','
        << join_sizes(c.filter_sizes) << ',' << c.feature_maps << ',' << c.hidden_size << ','
        << c.seed << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Expected validation performance

std::vector<EvpPoint> expected_validation_performance(std::span<const double> scores_in,
                                                      EvpMethod method, std::size_t resamples,
                                                      std::uint64_t seed) {
  const std::size_t N = scores_in.size();
  if (N == 0) throw UsageError("evp: no scores");
  for (double s : scores_in)
    if (!std::isfinite(s)) throw NumericError("evp: non-finite score");
  std::vector<double> v(scores_in.begin(), scores_in.end());
  std::sort(v.begin(), v.end());
  const double vmax = v.back();
  if (method == EvpMethod::automatic) method = N <= 10 ? EvpMethod::exact : EvpMethod::bootstrap;

  std::vector<EvpPoint> curve;
  if (method == EvpMethod::exact) {
    // With sorted v, P(max of j draws <= v_i) = C(i, j) / C(N, j) (1-based i).
    // F[i] holds that probability for i = 1..N; updated in place as j grows.
    std::vector<double> F(N + 1);
    for (std::size_t i = 0; i <= N; ++i) F[i] = static_cast<double>(i) / static_cast<double>(N);
    for (std::size_t j = 1; j <= N; ++j) {
      if (j > 1)
        for (std::size_t i = 0; i <= N; ++i)
          F[i] = i < j ? 0.0
                       : F[i] * static_cast<double>(i - (j - 1)) / static_cast<double>(N - (j - 1));
      F[N] = 1.0;
      // E[max] = v_N - sum_{i<N} F_i (v_{i+1} - v_i); summed as gaps so that
      // ties and the j = N end point are exact.
      double mean = vmax;
      for (std::size_t i = 1; i < N; ++i) mean -= F[i] * (v[i] - v[i - 1]);
      double var = 0.0;
      for (std::size_t i = 1; i <= N; ++i) {
        const double w = F[i] - F[i - 1];
        var += w * (v[i - 1] - mean) * (v[i - 1] - mean);
      }
      if (j == N) mean = vmax, var = 0.0;
      curve.push_back({j, mean, std::sqrt(std::max(var, 0.0))});
    }
    return curve;
  }

  if (resamples == 0) throw UsageError("evp: bootstrap needs at least one resample");
  std::vector<double> sum(N, 0.0), sum_sq(N, 0.0);
  Rng rng(seed);
  std::vector<double> perm(scores_in.begin(), scores_in.end());
  for (std::size_t r = 0; r < resamples; ++r) {
    rng.shuffle(perm);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) {
      best = std::max(best, perm[j]);
      const double gap = vmax - best;
      sum[j] += gap;
      sum_sq[j] += gap * gap;
    }
  }
  const double R = static_cast<double>(resamples);
  for (std::size_t j = 0; j < N; ++j) {
    const double mgap = sum[j] / R;
    const double var = std::max(sum_sq[j] / R - mgap * mgap, 0.0);
    curve.push_back({j + 1, vmax - mgap, std::sqrt(var)});
  }
  // Prefix maxima make every sample path monotone, so the averaged curve is too.
  return curve;
}

std::vector<EvpPoint> expected_validation_performance(const std::vector<HpoTrial>& trials,
                                                      EvpMethod method, std::size_t resamples,
                                                      std::uint64_t seed) {
  std::vector<HpoTrial> by_index = trials;
  std::sort(by_index.begin(), by_index.end(),
            [](const HpoTrial& a, const HpoTrial& b) { return a.index < b.index; });
  std::vector<double> scores;
  for (const auto& t : by_index) scores.push_back(t.val_f1);
  return expected_validation_performance(scores, method, resamples, seed);
}

void write_evp_csv(std::ostream& out, const std::vector<EvpPoint>& curve) {
  out << "trials,expected_max,sd\n" << std::fixed << std::setprecision(6);
  for (const auto& p : curve) out << p.trials << ',' << p.mean << ',' << p.sd << '\n';
  out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Ablations and comparison

std::vector<NamedConfig> default_ablation_matrix(const QuestCNNConfig& base, bool have_pretrained) {
  std::vector<NamedConfig> m;
  auto kim = kim_cnn_config(base);
  {
    auto c = kim;
    c.embeddings_trainable = true;
    m.push_back({"CNN-rand", c});
  }
  if (have_pretrained) {
    auto c = kim;
    c.embeddings_trainable = false;
    m.push_back({"CNN-static", c});
    c.embeddings_trainable = true;
    m.push_back({"CNN-non-static", c});
  }
  struct Combo {
    const char* name;
    bool word, pos, sem;
  };
  const Combo combos[] = {{"word", true, false, false},        {"word+pos", true, true, false},
                          {"word+semantic", true, false, true}, {"pos+semantic", false, true, true},
                          {"word+pos+semantic", true, true, true}};
  for (const auto& cb : combos) {
    auto c = base;
    c.use_word = cb.word;
    c.use_pos = cb.pos;
    c.use_semantic = cb.sem;
    c.semantic_strategy = SemanticStrategy::separate_channel;
    m.push_back({cb.name, c});
  }
  {
    auto c = base;
    c.use_stats = false;
    m.push_back({"no-stats", c});
  }
  {
    auto c = base;
    c.semantic_strategy = SemanticStrategy::replace_words;
    m.push_back({"semantic-replace", c});
  }
  {
    auto c = base;
    c.pos_representation = PosRepresentation::one_hot;
    m.push_back({"pos-one-hot", c});
  }
  {
    auto c = base;
    c.use_rule_indicators = true;
    m.push_back({"rule-indicators", c});
  }
  return m;
}

std::vector<AblationRow> run_ablation(const Dataset& dataset, const Split& split,
                                      const std::vector<NamedConfig>& matrix,
                                      const Resources& resources) {
  std::vector<AblationRow> rows(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    Resources res = resources;
    if (matrix[i].name == "CNN-rand") res.pretrained = nullptr;
    const auto model = train(matrix[i].config, dataset, split, res);
    rows[i].name = matrix[i].name;
    if (!split.test.empty()) rows[i].test_f1 = evaluate_model(model, dataset, split.test).micro_f1;
    if (!split.validation.empty())
      rows[i].val_f1 = evaluate_model(model, dataset, split.validation).micro_f1;
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "config,test_f1,val_f1\n" << std::fixed << std::setprecision(4);
  for (const auto& r : rows) out << csv_field(r.name) << ',' << r.test_f1 << ',' << r.val_f1 << '\n';
  out.unsetf(std::ios::floatfield);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sd_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

std::vector<ComparisonRow> compare_models(const Dataset& dataset, const Split& split,
                                          const std::vector<NamedConfig>& models,
                                          std::span<const std::uint64_t> seeds,
                                          const Resources& resources) {
  if (seeds.empty()) throw UsageError("compare: need at least one seed");
  std::vector<ComparisonRow> rows;
  for (const auto& nm : models) {
    ComparisonRow row;
    row.model = nm.name;
    for (auto seed : seeds) {
      auto cfg = nm.config;
      cfg.seed = seed;
      const auto model = train(cfg, dataset, split, resources);
      row.test_f1.push_back(split.test.empty() ? 0.0
                                               : evaluate_model(model, dataset, split.test).micro_f1);
      row.val_f1.push_back(
          split.validation.empty() ? 0.0 : evaluate_model(model, dataset, split.validation).micro_f1);
    }
    row.test_mean = mean_of(row.test_f1);
    row.test_sd = sd_of(row.test_f1);
    row.val_mean = mean_of(row.val_f1);
    row.val_sd = sd_of(row.val_f1);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "model,test_mean,test_sd,val_mean,val_sd,runs\n" << std::fixed << std::setprecision(4);
  for (const auto& r : rows)
    out << csv_field(r.model) << ',' << r.test_mean << ',' << r.test_sd << ',' << r.val_mean << ','
        << r.val_sd << ',' << r.test_f1.size() << '\n';
  out.unsetf(std::ios::floatfield);
}

}  // namespace questcnn
