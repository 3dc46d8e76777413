#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "questcnn/errors.hpp"
#include "questcnn/features.hpp"
#include "questcnn/rng.hpp"

namespace questcnn {

double oov_bound(std::size_t dim) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  return std::sqrt(3.0 / static_cast<double>(dim));
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t oov_seed)
    : dim_(dim), oov_seed_(oov_seed), vectors_(0, dim) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::random(const std::vector<std::string>& tokens, std::size_t dim,
                                      std::uint64_t oov_seed) {
  EmbeddingTable t(dim, oov_seed);
  for (const auto& tok : tokens) t.add_oov(tok);
  return t;
}

std::optional<std::size_t> EmbeddingTable::row_of(std::string_view token) const {
  auto it = rows_.find(token);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_)
    throw UsageError("embedding for '" + token + "' has length " + std::to_string(vector.size()) +
                     ", expected " + std::to_string(dim_));
  if (rows_.count(token)) throw DataError("duplicate embedding token '" + token + "'");
  const std::size_t row = tokens_.size();
  vectors_.append_row(vector);
  rows_.emplace(token, row);
  tokens_.push_back(std::move(token));
  return row;
}

std::size_t EmbeddingTable::add_oov(std::string token) {
  auto v = oov_vector(token);
  return add(std::move(token), v);
}

std::vector<double> EmbeddingTable::oov_vector(std::string_view token) const {
  const double bound = oov_bound(dim_);
  Rng rng(Rng::derive(oov_seed_, Rng::hash(token)));
  std::vector<double> v(dim_);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return v;
}

std::vector<double> EmbeddingTable::lookup(std::string_view token) const {
  if (auto row = row_of(token)) {
    auto r = vectors_.row(*row);
    return {r.begin(), r.end()};
  }
  return oov_vector(token);
}

// ---------------------------------------------------------------------------

EmbeddingTable read_word2vec(std::istream& in, std::size_t expected_dim) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("word2vec line " + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) throw DataError("word2vec: missing header");
  ++line_no;
  std::istringstream header(line);
  long long count = -1, dim = -1;
  std::string extra;
  if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim <= 0)
    throw fail("header must be \"count dim\"");
  if (expected_dim != 0 && static_cast<std::size_t>(dim) != expected_dim)
    throw fail("dimension " + std::to_string(dim) + " does not match expected " +
               std::to_string(expected_dim));

  EmbeddingTable table(static_cast<std::size_t>(dim));
  table.trainable = false;
  std::vector<double> values(static_cast<std::size_t>(dim));
  while (table.size() < static_cast<std::size_t>(count) && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) throw fail("empty line");
    for (long long d = 0; d < dim; ++d) {
      std::string field;
      if (!(ls >> field)) throw fail("expected " + std::to_string(dim) + " values");
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end != field.c_str() + field.size() || !std::isfinite(v))
        throw fail("bad value '" + field + "'");
      values[static_cast<std::size_t>(d)] = v;
    }
    if (ls >> extra) throw fail("more than " + std::to_string(dim) + " values");
    if (table.row_of(token)) throw fail("duplicate token '" + token + "'");
    table.add(std::move(token), values);
  }
  if (table.size() != static_cast<std::size_t>(count))
    throw DataError("word2vec: header declares " + std::to_string(count) + " vectors, found " +
                    std::to_string(table.size()));
  return table;
}

EmbeddingTable load_word2vec(const std::filesystem::path& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings '" + path.string() + "'");
  try {
    return read_word2vec(in, expected_dim);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_word2vec(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << table.token(r);
    for (double v : table.vectors().row(r)) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace questcnn
