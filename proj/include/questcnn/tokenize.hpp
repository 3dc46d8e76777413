#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace questcnn {

// Splits on whitespace, then detaches leading and trailing ASCII punctuation
// as one-character tokens. Inner punctuation stays ("i'm", "3.5", "e.g").
std::vector<std::string> tokenize(std::string_view text);

// True when every byte of the token is ASCII punctuation.
bool is_punctuation(std::string_view token);

std::string to_lower(std::string_view s);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

}  // namespace questcnn
