#include "questcnn/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "questcnn/errors.hpp"

namespace questcnn {

std::string_view model_kind_name(ModelKind k) {
  return k == ModelKind::quest_cnn ? "quest_cnn" : "fasttext";
}

std::string_view conv_norm_name(ConvNorm n) {
  switch (n) {
    case ConvNorm::none: return "none";
    case ConvNorm::pre_pool: return "pre_pool";
    case ConvNorm::post_pool: return "post_pool";
  }
  return "?";
}

void QuestCNNConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    return UsageError("config '" + field + "': " + why);
  };
  if (!use_word && !use_pos && !(use_semantic && semantic_strategy == SemanticStrategy::separate_channel))
    throw bad("channels", "at least one channel must be enabled");
  if (kind == ModelKind::fasttext && !use_word) throw bad("channels", "fasttext needs the word channel");
  if (filter_sizes.empty()) throw bad("filter_sizes", "must not be empty");
  for (auto h : filter_sizes)
    if (h < 1) throw bad("filter_sizes", "every size must be >= 1");
  if (feature_maps < 1) throw bad("feature_maps", "must be >= 1");
  if (kind == ModelKind::quest_cnn && hidden_size < 1) throw bad("hidden_size", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw bad("dropout", "must be in [0, 1)");
  if (!(embedding_dropout >= 0.0 && embedding_dropout < 1.0))
    throw bad("embedding_dropout", "must be in [0, 1)");
  if (!(lr > 0.0)) throw bad("lr", "must be positive");
  if (batch_size < 1) throw bad("batch_size", "must be >= 1");
  if (epochs < 1) throw bad("epochs", "must be >= 1");
  if (embedding_dim < 1) throw bad("embedding_dim", "must be >= 1");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw bad("bn_momentum", "must be in (0, 1]");
  if (!(bn_eps > 0.0)) throw bad("bn_eps", "must be positive");
  if (!(stop_at_train_f1 >= 0.0 && stop_at_train_f1 <= 1.0))
    throw bad("stop_at_train_f1", "must be in [0, 1]");
}

std::vector<Channel> QuestCNNConfig::channel_kinds() const {
  std::vector<Channel> kinds;
  if (use_word) kinds.push_back(Channel::word);
  if (kind == ModelKind::fasttext) return kinds;
  if (use_pos) kinds.push_back(Channel::pos);
  if (use_semantic && semantic_strategy == SemanticStrategy::separate_channel)
    kinds.push_back(Channel::semantic);
  return kinds;
}

std::size_t QuestCNNConfig::channel_count() const { return channel_kinds().size(); }

QuestCNNConfig kim_cnn_config(QuestCNNConfig base) {
  base.kind = ModelKind::quest_cnn;
  base.use_word = true;
  base.use_pos = false;
  base.use_semantic = false;
  base.use_stats = false;
  base.use_rule_indicators = false;
  return base;
}

QuestCNNConfig kim_cnn_tuned_config(QuestCNNConfig base) {
  base = kim_cnn_config(std::move(base));
  base.batch_size = 64;
  base.filter_sizes = {2, 4, 8};
  base.feature_maps = 164;
  base.lr = 0.003;
  base.dropout = 0.077;
  return base;
}

QuestCNNConfig fasttext_config(QuestCNNConfig base) {
  base.kind = ModelKind::fasttext;
  base.use_word = true;
  base.use_pos = false;
  base.use_semantic = false;
  base.use_stats = false;
  base.use_rule_indicators = false;
  return base;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

DataError bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  return DataError("config key '" + std::string(key) + "': invalid value '" + std::string(value) +
                   "' (expected " + std::string(expected) + ")");
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw bad_value(key, v, "true/false");
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out))
    throw bad_value(key, v, "a number");
  return out;
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    auto comma = v.find(',');
    auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void apply_setting(QuestCNNConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "model") {
    if (value == "quest_cnn") cfg.kind = ModelKind::quest_cnn;
    else if (value == "fasttext") cfg.kind = ModelKind::fasttext;
    else throw bad_value(key, value, "quest_cnn or fasttext");
  } else if (key == "channels") {
    cfg.use_word = cfg.use_pos = cfg.use_semantic = false;
    for (auto item : split_list(value)) {
      if (item == "word") cfg.use_word = true;
      else if (item == "pos") cfg.use_pos = true;
      else if (item == "semantic") cfg.use_semantic = true;
      else throw bad_value(key, value, "a list of word, pos, semantic");
    }
  } else if (key == "semantic_strategy") {
    try {
      cfg.semantic_strategy = parse_strategy(value);
    } catch (const DataError&) {
      throw bad_value(key, value, "replace_words or separate_channel");
    }
  } else if (key == "pos_representation") {
    if (value == "embedding") cfg.pos_representation = PosRepresentation::embedding;
    else if (value == "one_hot") cfg.pos_representation = PosRepresentation::one_hot;
    else throw bad_value(key, value, "embedding or one_hot");
  } else if (key == "filter_sizes") {
    cfg.filter_sizes.clear();
    for (auto item : split_list(value)) cfg.filter_sizes.push_back(parse_uint(key, item));
  } else if (key == "feature_maps") {
    cfg.feature_maps = parse_uint(key, value);
  } else if (key == "hidden_size") {
    cfg.hidden_size = parse_uint(key, value);
  } else if (key == "dropout") {
    cfg.dropout = parse_double(key, value);
  } else if (key == "embedding_dropout") {
    cfg.embedding_dropout = parse_double(key, value);
  } else if (key == "use_stats") {
    cfg.use_stats = parse_bool(key, value);
  } else if (key == "use_rule_indicators") {
    cfg.use_rule_indicators = parse_bool(key, value);
  } else if (key == "embeddings_trainable") {
    cfg.embeddings_trainable = parse_bool(key, value);
  } else if (key == "lr") {
    cfg.lr = parse_double(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_uint(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_uint(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "embedding_dim") {
    cfg.embedding_dim = parse_uint(key, value);
  } else if (key == "max_len") {
    cfg.max_len = parse_uint(key, value);
  } else if (key == "conv_activation") {
    try {
      cfg.conv_activation = nn::parse_activation(value);
    } catch (const UsageError&) {
      throw bad_value(key, value, "relu or tanh");
    }
  } else if (key == "hidden_activation") {
    try {
      cfg.hidden_activation = nn::parse_activation(value);
    } catch (const UsageError&) {
      throw bad_value(key, value, "relu or tanh");
    }
  } else if (key == "conv_norm") {
    if (value == "none") cfg.conv_norm = ConvNorm::none;
    else if (value == "pre_pool") cfg.conv_norm = ConvNorm::pre_pool;
    else if (value == "post_pool") cfg.conv_norm = ConvNorm::post_pool;
    else throw bad_value(key, value, "none, pre_pool or post_pool");
  } else if (key == "hidden_batchnorm") {
    cfg.hidden_batchnorm = parse_bool(key, value);
  } else if (key == "bn_momentum") {
    cfg.bn_momentum = parse_double(key, value);
  } else if (key == "bn_eps") {
    cfg.bn_eps = parse_double(key, value);
  } else if (key == "zero_init_output") {
    cfg.zero_init_output = parse_bool(key, value);
  } else if (key == "stop_at_train_f1") {
    cfg.stop_at_train_f1 = parse_double(key, value);
  } else {
    throw DataError("config key '" + std::string(key) + "': unknown key");
  }
}

QuestCNNConfig read_config(std::istream& in, QuestCNNConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  try {
    cfg.validate();
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return cfg;
}

QuestCNNConfig load_config(const std::filesystem::path& path, QuestCNNConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  return read_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const QuestCNNConfig& cfg) {
  std::vector<std::string_view> channels;
  if (cfg.use_word) channels.push_back("word");
  if (cfg.use_pos) channels.push_back("pos");
  if (cfg.use_semantic) channels.push_back("semantic");
  std::string ch;
  for (std::size_t i = 0; i < channels.size(); ++i) ch += (i ? "," : "") + std::string(channels[i]);
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"model", std::string(model_kind_name(cfg.kind))},
      {"channels", ch},
      {"semantic_strategy", std::string(strategy_name(cfg.semantic_strategy))},
      {"pos_representation",
       cfg.pos_representation == PosRepresentation::embedding ? "embedding" : "one_hot"},
      {"filter_sizes", join_sizes(cfg.filter_sizes)},
      {"feature_maps", std::to_string(cfg.feature_maps)},
      {"hidden_size", std::to_string(cfg.hidden_size)},
      {"dropout", format_double(cfg.dropout)},
      {"embedding_dropout", format_double(cfg.embedding_dropout)},
      {"use_stats", b(cfg.use_stats)},
      {"use_rule_indicators", b(cfg.use_rule_indicators)},
      {"embeddings_trainable", b(cfg.embeddings_trainable)},
      {"lr", format_double(cfg.lr)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"epochs", std::to_string(cfg.epochs)},
      {"seed", std::to_string(cfg.seed)},
      {"embedding_dim", std::to_string(cfg.embedding_dim)},
      {"max_len", std::to_string(cfg.max_len)},
      {"conv_activation", std::string(nn::activation_name(cfg.conv_activation))},
      {"hidden_activation", std::string(nn::activation_name(cfg.hidden_activation))},
      {"conv_norm", std::string(conv_norm_name(cfg.conv_norm))},
      {"hidden_batchnorm", b(cfg.hidden_batchnorm)},
      {"bn_momentum", format_double(cfg.bn_momentum)},
      {"bn_eps", format_double(cfg.bn_eps)},
      {"zero_init_output", b(cfg.zero_init_output)},
      {"stop_at_train_f1", format_double(cfg.stop_at_train_f1)},
  };
}

void write_config(std::ostream& out, const QuestCNNConfig& cfg) {
  for (const auto& [k, v] : config_entries(cfg)) out << k << " = " << v << '\n';
}

}  // namespace questcnn
