#include "questcnn/tokenize.hpp"

#include <cctype>

namespace questcnn {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (unsigned char c : token)
    if (!is_punct(c)) return false;
  return true;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string_view chunk = text.substr(i, j - i);
    i = j;

    std::size_t lead = 0;
    while (lead < chunk.size() && is_punct(static_cast<unsigned char>(chunk[lead]))) ++lead;
    if (lead == chunk.size()) {
      for (char c : chunk) tokens.emplace_back(1, c);
      continue;
    }
    std::size_t trail = chunk.size();
    while (trail > lead && is_punct(static_cast<unsigned char>(chunk[trail - 1]))) --trail;

    for (std::size_t k = 0; k < lead; ++k) tokens.emplace_back(1, chunk[k]);
    tokens.emplace_back(chunk.substr(lead, trail - lead));
    for (std::size_t k = trail; k < chunk.size(); ++k) tokens.emplace_back(1, chunk[k]);
  }
  return tokens;
}

}  // namespace questcnn
