#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "questcnn/config.hpp"
#include "questcnn/corpus.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/eval.hpp"
#include "questcnn/features.hpp"
#include "questcnn/model.hpp"
#include "questcnn/rules.hpp"
#include "questcnn/synthetic.hpp"

#ifndef QUESTCNN_GIT_REVISION
#define QUESTCNN_GIT_REVISION "unknown"
#endif

namespace questcnn::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::string corpus;
  std::string embeddings;
  std::string lexicon;
  std::string rules = "all";
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> settings;  // key=value overrides
};

// Everything a subcommand needs beyond the common flags.
struct Extra {
  std::string checkpoint;
  std::size_t trials = 10;
  std::size_t seeds = 5;
  std::string kind = "dialogue";
  std::size_t n = 200;
  std::size_t resamples = 1000;
};

class Run {
 public:
  Run(std::string subcommand, const Common& c, std::ostream& out)
      : subcommand_(std::move(subcommand)), common_(c), out_(out) {
    dir_ = c.out_dir;
    if (dir_.empty()) {
      const char* env = std::getenv(kOutDirEnv);
      dir_ = env && *env ? env : "out";
    }
  }

  const fs::path& dir() const { return dir_; }

  // Written before any artifact, listing every file the run will produce.
  void begin(const std::vector<std::string>& outputs, std::uint64_t seed) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    outputs_ = outputs;
    json m;
    m["subcommand"] = subcommand_;
    m["config"] = common_.config.empty() ? json(nullptr) : json(common_.config);
    json inputs = json::object();
    if (!common_.corpus.empty()) inputs["corpus"] = common_.corpus;
    if (!common_.embeddings.empty()) inputs["embeddings"] = common_.embeddings;
    if (!common_.lexicon.empty()) inputs["lexicon"] = common_.lexicon;
    for (const auto& [k, v] : extra_inputs_) inputs[k] = v;
    m["inputs"] = inputs;
    m["settings"] = common_.settings;
    m["outputs"] = outputs;
    m["seed"] = seed;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m["timestamp"] = ts.str();
    m["git_revision"] = QUESTCNN_GIT_REVISION;
    std::ofstream f(dir_ / "manifest.json");
    if (!f) throw DataError("cannot write '" + (dir_ / "manifest.json").string() + "'");
    f << m.dump(2) << '\n';
  }

  void add_input(const std::string& key, const std::string& path) { extra_inputs_[key] = path; }

  // Opens a declared output for writing.
  std::ofstream open(const std::string& name) {
    if (std::find(outputs_.begin(), outputs_.end(), name) == outputs_.end())
      throw std::logic_error("output '" + name + "' missing from the manifest");
    const auto path = dir_ / name;
    std::ofstream f(path);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    out_ << "wrote " << path.string() << '\n';
    return f;
  }

 private:
  std::string subcommand_;
  const Common& common_;
  std::ostream& out_;
  fs::path dir_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::string> extra_inputs_;
};

Dataset require_corpus(const Common& c) {
  if (c.corpus.empty()) throw UsageError("--corpus is required");
  return load_jsonl(c.corpus);
}

QuestCNNConfig resolve_config(const Common& c) {
  QuestCNNConfig cfg = c.config.empty() ? QuestCNNConfig{} : load_config(c.config);
  for (const auto& s : c.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto a = v.find_first_not_of(" \t");
      const auto b = v.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    try {
      apply_setting(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const DataError& e) {
      throw UsageError(std::string("--set: ") + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

struct LoadedResources {
  std::optional<EmbeddingTable> embeddings;
  std::optional<SemanticLexicon> lexicon;
  Resources resources;
};

void load_resources(const Common& c, const QuestCNNConfig& cfg, LoadedResources& r) {
  if (!c.embeddings.empty()) {
    r.embeddings = load_word2vec(c.embeddings, 0);
    r.resources.pretrained = &*r.embeddings;
  }
  if (!c.lexicon.empty()) {
    r.lexicon = load_lexicon_tsv(c.lexicon);
    r.resources.lexicon = &*r.lexicon;
  }
  (void)cfg;
}

void require_labels(const Dataset& d) {
  if (!d.all_labeled()) throw DataError("every sentence of the corpus needs a gold label");
}

std::string part_name(const Split& s, std::size_t i) {
  auto has = [&](const std::vector<std::size_t>& v) {
    return std::find(v.begin(), v.end(), i) != v.end();
  };
  if (has(s.train)) return "train";
  if (has(s.validation)) return "validation";
  return "test";
}

void write_split_csv(std::ostream& out, const Dataset& d, const Split& s) {
  out << "id,part\n";
  for (std::size_t i = 0; i < d.size(); ++i) out << d[i].id << ',' << part_name(s, i) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_extract(const Common& c, Run& run, std::ostream& out) {
  const auto d = require_corpus(c);
  const auto rules = parse_rule_set(c.rules);
  const bool labeled = !d.empty() && d.all_labeled();
  std::vector<std::string> outputs = {"candidates.jsonl"};
  if (labeled) outputs.insert(outputs.end(), {"rule_report.csv", "rule_errors.csv"});
  run.begin(outputs, 0);
  const auto cands = extract_candidates(d, rules);
  {
    auto f = run.open("candidates.jsonl");
    write_candidates_jsonl(f, cands);
  }
  out << cands.size() << " of " << d.size() << " sentences flagged\n";
  if (labeled) {
    const auto report = evaluate_rules(d);
    auto f = run.open("rule_report.csv");
    write_rule_report_csv(f, report);
    auto g = run.open("rule_errors.csv");
    write_rule_errors_csv(g, report);
  } else {
    out << "notice: corpus has unlabeled sentences; rule report skipped\n";
  }
  return kOk;
}

int cmd_eval_rules(const Common& c, Run& run, std::ostream&) {
  const auto d = require_corpus(c);
  require_labels(d);
  run.begin({"rule_report.csv", "rule_errors.csv"}, 0);
  const auto report = evaluate_rules(d);
  auto f = run.open("rule_report.csv");
  write_rule_report_csv(f, report);
  auto g = run.open("rule_errors.csv");
  write_rule_errors_csv(g, report);
  return kOk;
}

int cmd_stats(const Common& c, Run& run, std::ostream&) {
  const auto d = require_corpus(c);
  if (d.empty()) throw DataError("corpus is empty");
  run.begin({"corpus_stats.csv"}, 0);
  auto f = run.open("corpus_stats.csv");
  write_stats_csv(f, corpus_stats(d));
  return kOk;
}

int cmd_train(const Common& c, Run& run, std::ostream& out) {
  const auto cfg = resolve_config(c);
  const auto d = require_corpus(c);
  require_labels(d);
  LoadedResources res;
  load_resources(c, cfg, res);
  run.begin({"config.txt", "split.csv", "model.json", "history.csv", "metrics_validation.csv",
             "metrics_test.csv", "confusion_test.csv"},
            cfg.seed);
  {
    auto f = run.open("config.txt");
    write_config(f, cfg);
  }
  const auto split = split_dataset(d, cfg.seed);
  {
    auto f = run.open("split.csv");
    write_split_csv(f, d, split);
  }
  const auto model = train(cfg, d, split, res.resources);
  save_checkpoint(model, run.dir() / "model.json");
  out << "wrote " << (run.dir() / "model.json").string() << '\n';
  {
    auto f = run.open("history.csv");
    write_history_csv(f, model.history());
  }
  const auto val = evaluate_model(model, d, split.validation);
  const auto test = evaluate_model(model, d, split.test);
  {
    auto f = run.open("metrics_validation.csv");
    write_metrics_csv(f, val);
  }
  {
    auto f = run.open("metrics_test.csv");
    write_metrics_csv(f, test);
    auto g = run.open("confusion_test.csv");
    write_confusion_csv(g, test);
  }
  out << "best epoch " << model.best_epoch() << ", validation micro-F1 " << val.micro_f1
      << ", test micro-F1 " << test.micro_f1 << '\n';
  return kOk;
}

TrainedModel require_checkpoint(const Extra& x, Run& run) {
  if (x.checkpoint.empty()) throw UsageError("--checkpoint is required");
  run.add_input("checkpoint", x.checkpoint);
  return load_checkpoint(x.checkpoint);
}

int cmd_eval(const Common& c, const Extra& x, Run& run, std::ostream& out) {
  const auto d = require_corpus(c);
  require_labels(d);
  const auto model = require_checkpoint(x, run);
  run.begin({"metrics.csv", "confusion.csv"}, model.config().seed);
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto report = evaluate_model(model, d, all);
  auto f = run.open("metrics.csv");
  write_metrics_csv(f, report);
  auto g = run.open("confusion.csv");
  write_confusion_csv(g, report);
  out << "micro-F1 " << report.micro_f1 << " on " << report.n << " sentences\n";
  return kOk;
}

int cmd_predict(const Common& c, const Extra& x, Run& run, std::ostream& out) {
  const auto d = require_corpus(c);
  const auto model = require_checkpoint(x, run);
  run.begin({"predictions.jsonl"}, model.config().seed);
  const auto preds = predict_batch(model, d.sentences());
  auto f = run.open("predictions.jsonl");
  write_predictions_jsonl(f, model, preds);
  std::size_t failed = 0;
  for (const auto& p : preds)
    if (!p.error.empty()) {
      ++failed;
      out << "error: " << p.id << ": " << p.error << '\n';
    }
  return failed ? kDataError : kOk;
}

std::pair<Split, Dataset> labeled_split(const Common& c, const QuestCNNConfig& cfg) {
  auto d = require_corpus(c);
  require_labels(d);
  auto split = split_dataset(d, cfg.seed);
  return {std::move(split), std::move(d)};
}

int cmd_ablate(const Common& c, Run& run, std::ostream&) {
  const auto cfg = resolve_config(c);
  const auto [split, d] = labeled_split(c, cfg);
  LoadedResources res;
  load_resources(c, cfg, res);
  run.begin({"ablation.csv"}, cfg.seed);
  const auto rows = run_ablation(d, split, default_ablation_matrix(cfg, res.embeddings.has_value()),
                                 res.resources);
  auto f = run.open("ablation.csv");
  write_ablation_csv(f, rows);
  return kOk;
}

int cmd_hpo(const Common& c, const Extra& x, Run& run, std::ostream& out) {
  const auto cfg = resolve_config(c);
  const auto [split, d] = labeled_split(c, cfg);
  LoadedResources res;
  load_resources(c, cfg, res);
  run.begin({"trials.csv", "evp.csv"}, cfg.seed);
  const auto trials = hpo_search(HpoBounds{}, cfg, x.trials, cfg.seed, [&](const QuestCNNConfig& t) {
    const auto model = train(t, d, split, res.resources);
    return evaluate_model(model, d, split.validation).micro_f1;
  });
  {
    auto f = run.open("trials.csv");
    write_trials_csv(f, trials);
  }
  auto f = run.open("evp.csv");
  write_evp_csv(f, expected_validation_performance(trials, EvpMethod::automatic, x.resamples,
                                                   cfg.seed));
  out << "best validation micro-F1 " << trials.front().val_f1 << " (trial "
      << trials.front().index << ")\n";
  return kOk;
}

int cmd_compare(const Common& c, const Extra& x, Run& run, std::ostream&) {
  const auto cfg = resolve_config(c);
  const auto [split, d] = labeled_split(c, cfg);
  LoadedResources res;
  load_resources(c, cfg, res);
  if (x.seeds == 0) throw UsageError("--seeds must be at least 1");
  run.begin({"comparison.csv"}, cfg.seed);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < x.seeds; ++i) seeds.push_back(cfg.seed + i);
  const std::vector<NamedConfig> models = {{"Quest-CNN", cfg},
                                           {"Kim-CNN", kim_cnn_config(cfg)},
                                           {"Kim-CNN (tuned)", kim_cnn_tuned_config(cfg)},
                                           {"FastText", fasttext_config(cfg)}};
  const auto rows = compare_models(d, split, models, seeds, res.resources);
  auto f = run.open("comparison.csv");
  write_comparison_csv(f, rows);
  return kOk;
}

int cmd_synth(const Common& c, const Extra& x, Run& run, std::ostream&) {
  const std::uint64_t seed = c.seed.value_or(1);
  Dataset d;
  if (x.kind == "separable") d = synthetic::separable(x.n, seed);
  else if (x.kind == "order_pos") d = synthetic::order_pos_task(x.n, seed);
  else if (x.kind == "dialogue") d = synthetic::dialogue_corpus(x.n, seed);
  else throw UsageError("unknown --kind '" + x.kind + "' (separable, order_pos, dialogue)");
  run.begin({"corpus.jsonl"}, seed);
  auto f = run.open("corpus.jsonl");
  write_jsonl(f, d);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Question detection for review dialogue logs", "questcnn"};
  app.require_subcommand(1);
  Common c;
  Extra x;

  auto common = [&](CLI::App* sub, bool model_flags) {
    sub->add_option("--corpus", c.corpus, "JSONL corpus");
    sub->add_option("--seed", c.seed, "Random seed (overrides the config)");
    sub->add_option("--out-dir", c.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or ./out)");
    if (model_flags) {
      sub->add_option("--config", c.config, "key = value configuration file");
      sub->add_option("--embeddings", c.embeddings, "word2vec text-format vectors");
      sub->add_option("--lexicon", c.lexicon, "Semantic lexicon TSV (token<TAB>group)");
      sub->add_option("--set", c.settings, "Configuration override key=value (repeatable)");
    }
  };

  std::map<CLI::App*, std::function<int(Run&)>> handlers;
  auto add = [&](const char* name, const char* help, bool model_flags, std::function<int(Run&)> h) {
    auto* sub = app.add_subcommand(name, help);
    common(sub, model_flags);
    handlers[sub] = std::move(h);
    return sub;
  };

  auto* extract = add("extract", "Flag candidate questions with the rule families", false,
                      [&](Run& r) { return cmd_extract(c, r, out); });
  extract->add_option("--rules", c.rules, "Comma-separated rule names or 'all'");
  add("eval-rules", "Score every rule family against gold labels", false,
      [&](Run& r) { return cmd_eval_rules(c, r, out); });
  add("stats", "Per-class corpus statistics", false, [&](Run& r) { return cmd_stats(c, r, out); });
  add("train", "Train a classifier on an 80/10/10 split", true,
      [&](Run& r) { return cmd_train(c, r, out); });
  auto* ev = add("eval", "Evaluate a checkpoint on a labeled corpus", false,
                 [&](Run& r) { return cmd_eval(c, x, r, out); });
  ev->add_option("--checkpoint", x.checkpoint, "model.json from train")->required();
  auto* pred = add("predict", "Label sentences with a checkpoint", false,
                   [&](Run& r) { return cmd_predict(c, x, r, out); });
  pred->add_option("--checkpoint", x.checkpoint, "model.json from train")->required();
  add("ablate", "Train the ablation matrix", true, [&](Run& r) { return cmd_ablate(c, r, out); });
  auto* hpo = add("hpo", "Random hyperparameter search with an EVP curve", true,
                  [&](Run& r) { return cmd_hpo(c, x, r, out); });
  hpo->add_option("--trials", x.trials, "Number of sampled configurations")->check(CLI::PositiveNumber);
  hpo->add_option("--resamples", x.resamples, "Bootstrap orderings for the EVP curve when trials > 10")
      ->check(CLI::PositiveNumber);
  auto* cmp = add("compare", "Quest-CNN against Kim-CNN and FastText over several seeds", true,
                  [&](Run& r) { return cmd_compare(c, x, r, out); });
  cmp->add_option("--seeds", x.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  auto* syn = add("synth", "Write a synthetic corpus", false,
                  [&](Run& r) { return cmd_synth(c, x, r, out); });
  syn->add_option("--kind", x.kind, "separable, order_pos or dialogue");
  syn->add_option("-n", x.n, "Number of sentences")->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (auto& [sub, handler] : handlers) {
    if (!sub->parsed()) continue;
    try {
      Run r(sub->get_name(), c, out);
      return handler(r);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << '\n';
      return kUsage;
    } catch (const NumericError& e) {
      err << "numeric failure: " << e.what() << '\n';
      return kNumeric;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kDataError;
    }
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace questcnn::cli
