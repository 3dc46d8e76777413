#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "questcnn/errors.hpp"
#include "questcnn/model.hpp"

namespace questcnn {

using json = nlohmann::ordered_json;
using nn::Array2;

namespace {

constexpr const char* kFormat = "questcnn-checkpoint";
constexpr int kVersion = 1;

json array_json(const Array2& a) {
  return {{"rows", a.rows()}, {"cols", a.cols()}, {"data", a.values()}};
}

Array2 array_from(const json& j, const std::string& what) {
  try {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols)
      throw DataError("checkpoint: array '" + what + "' has " + std::to_string(data.size()) +
                      " values for shape " + std::to_string(rows) + "x" + std::to_string(cols));
    return Array2(rows, cols, std::move(data));
  } catch (const json::exception& e) {
    throw DataError("checkpoint: array '" + what + "': " + e.what());
  }
}

json table_json(const EmbeddingTable& t) {
  return {{"dim", t.dim()},
          {"oov_seed", t.oov_seed()},
          {"trainable", t.trainable},
          {"tokens", t.tokens()},
          {"vectors", array_json(t.vectors())}};
}

EmbeddingTable table_from(const json& j, const std::string& what) {
  EmbeddingTable t(j.at("dim").get<std::size_t>(), j.at("oov_seed").get<std::uint64_t>());
  t.trainable = j.at("trainable").get<bool>();
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  const Array2 v = array_from(j.at("vectors"), what);
  if (v.rows() != tokens.size() || (v.rows() > 0 && v.cols() != t.dim()))
    throw DataError("checkpoint: table '" + what + "' shape does not match its tokens");
  for (std::size_t i = 0; i < tokens.size(); ++i) t.add(tokens[i], v.row(i));
  return t;
}

void expect_shape(const Array2& got, const Array2& want, const std::string& name) {
  if (!got.same_shape(want))
    throw DataError("checkpoint: parameter '" + name + "' is " + nn::shape_string(got) +
                    ", expected " + nn::shape_string(want));
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainedModel& model_in) {
  // visit_* are non-const; the lambdas below only read.
  auto& model = const_cast<TrainedModel&>(model_in);
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  json cfg = json::object();
  for (const auto& [k, v] : config_entries(model.config())) cfg[k] = v;
  j["config"] = cfg;
  json classes = json::array();
  for (auto l : model.classes()) classes.push_back(label_name(l));
  j["classes"] = classes;
  j["max_len"] = model.max_len();
  j["vocab_size"] = model.vocab_size();
  j["stats_mean"] = model.stats_mean();
  j["stats_sd"] = model.stats_sd();
  j["words"] = table_json(model.word_table());
  j["pos"] = table_json(model.pos_table());
  j["groups"] = table_json(model.group_table());

  const auto& lex = model.lexicon();
  json entries = json::object();
  for (const auto& [tok, g] : lex.entries()) entries[tok] = lex.groups()[g];
  j["lexicon"] = {{"groups", lex.groups()},
                  {"strategy", strategy_name(lex.strategy)},
                  {"entries", entries}};
  j["rule_options"] = {{"auxiliaries", model.rule_options().auxiliaries},
                       {"li_include_qm", model.rule_options().li_include_qm}};

  json params = json::object();
  Gradients scratch = model.make_gradients();
  model.visit_parameters(scratch, [&](const std::string& name, Array2& v, Array2&, bool) {
    if (name.ends_with("_emb")) return;  // stored with the tables
    params[name] = array_json(v);
  });
  j["parameters"] = params;
  json buffers = json::object();
  model.visit_buffers([&](const std::string& name, Array2& v) { buffers[name] = array_json(v); });
  j["buffers"] = buffers;

  json history = json::array();
  for (const auto& r : model.history())
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"train_f1", r.train_f1},
                       {"val_f1", r.val_f1}});
  j["history"] = history;
  j["best_epoch"] = model.best_epoch();
  out << j.dump(1) << '\n';
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, model);
}

TrainedModel read_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw DataError("checkpoint: not a questcnn checkpoint");
    if (j.at("version").get<int>() != kVersion)
      throw DataError("checkpoint: unsupported version " + j.at("version").dump());

    QuestCNNConfig cfg;
    for (const auto& [k, v] : j.at("config").items()) apply_setting(cfg, k, v.get<std::string>());
    std::vector<Label> classes;
    for (const auto& c : j.at("classes")) classes.push_back(parse_label(c.get<std::string>()));

    const auto lj = j.at("lexicon");
    SemanticLexicon lex(lj.at("groups").get<std::vector<std::string>>());
    lex.strategy = parse_strategy(lj.at("strategy").get<std::string>());
    for (const auto& [tok, g] : lj.at("entries").items()) lex.add(tok, g.get<std::string>());

    RuleOptions ro;
    ro.auxiliaries = j.at("rule_options").at("auxiliaries").get<std::vector<std::string>>();
    ro.li_include_qm = j.at("rule_options").at("li_include_qm").get<bool>();

    TrainedModel m(cfg, classes, j.at("max_len").get<std::size_t>(),
                   j.at("vocab_size").get<std::size_t>(), table_from(j.at("words"), "words"),
                   table_from(j.at("pos"), "pos"), table_from(j.at("groups"), "groups"),
                   std::move(lex), std::move(ro));
    m.set_stats_normalization(j.at("stats_mean").get<std::array<double, 4>>(),
                              j.at("stats_sd").get<std::array<double, 4>>());

    const auto& params = j.at("parameters");
    Gradients scratch = m.make_gradients();
    m.visit_parameters(scratch, [&](const std::string& name, Array2& v, Array2&, bool) {
      if (name.ends_with("_emb")) return;
      if (!params.contains(name)) throw DataError("checkpoint: missing parameter '" + name + "'");
      Array2 a = array_from(params.at(name), name);
      expect_shape(a, v, name);
      v = std::move(a);
    });
    const auto& buffers = j.at("buffers");
    m.visit_buffers([&](const std::string& name, Array2& v) {
      if (!buffers.contains(name)) throw DataError("checkpoint: missing buffer '" + name + "'");
      Array2 a = array_from(buffers.at(name), name);
      expect_shape(a, v, name);
      v = std::move(a);
    });
    for (const auto& r : j.at("history")) {
      EpochRecord rec;
      rec.epoch = r.at("epoch").get<std::size_t>();
      rec.train_loss = r.at("train_loss").get<double>();
      rec.train_f1 = r.at("train_f1").get<double>();
      rec.val_f1 = r.at("val_f1").get<double>();
      m.history().push_back(rec);
    }
    m.set_best_epoch(j.at("best_epoch").get<std::size_t>());
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

void write_predictions_jsonl(std::ostream& out, const TrainedModel& model,
                             const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions) {
    json j;
    j["id"] = p.id;
    if (!p.error.empty()) {
      j["error"] = p.error;
    } else {
      j["label"] = p.label ? json(label_name(*p.label)) : json(nullptr);
      json probs = json::object();
      for (std::size_t c = 0; c < p.probs.size(); ++c)
        probs[std::string(label_name(model.classes()[c]))] = p.probs[c];
      j["probs"] = probs;
    }
    out << j.dump() << '\n';
  }
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,train_f1,val_f1\n" << std::fixed << std::setprecision(6);
  for (const auto& r : history)
    out << r.epoch << ',' << r.train_loss << ',' << r.train_f1 << ',' << r.val_f1 << '\n';
  out.unsetf(std::ios::floatfield);
}

}  // namespace questcnn
