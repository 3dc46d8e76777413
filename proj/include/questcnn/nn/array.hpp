#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "questcnn/errors.hpp"

namespace questcnn::nn {

// Row-major dense matrix of doubles.
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Array2(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw UsageError("Array2: data length does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  void append_row(std::span<const double> values) {
    if (values.size() != cols_) throw UsageError("Array2::append_row: width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Array2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Array2&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const Array2& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

inline void require_finite(const Array2& a, const char* what) {
  if (!a.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

}  // namespace questcnn::nn
