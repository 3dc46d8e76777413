#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "questcnn/corpus.hpp"
#include "questcnn/nn/array.hpp"
#include "questcnn/rng.hpp"

#ifndef QUESTCNN_DATA_DIR
#define QUESTCNN_DATA_DIR "data"
#endif
#ifndef QUESTCNN_ORACLE_DIR
#define QUESTCNN_ORACLE_DIR "tests/oracles"
#endif

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(QUESTCNN_DATA_DIR) / name;
}

inline std::filesystem::path oracle_path(const std::string& name) {
  return std::filesystem::path(QUESTCNN_ORACLE_DIR) / name;
}

inline questcnn::Dataset minicorpus() { return questcnn::load_jsonl(data_path("minicorpus.jsonl")); }

inline questcnn::nn::Array2 random_array(std::size_t r, std::size_t c, questcnn::Rng& rng,
                                         double scale = 1.0) {
  questcnn::nn::Array2 a(r, c);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-scale, scale);
  return a;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("questcnn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline questcnn::LabeledSentence sentence(std::string id, std::string text,
                                          std::optional<questcnn::Label> label = std::nullopt) {
  questcnn::LabeledSentence s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.label = label;
  return s;
}

}  // namespace testing
