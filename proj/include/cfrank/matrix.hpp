#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cfrank/common.hpp"

namespace cfrank {

// Row-major dense matrix of doubles. Rows are the unit of access everywhere
// (one row per user/item embedding).
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(index_t rows, index_t cols)
      : rows_(rows),
        cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
    require(rows >= 0 && cols >= 0, "RowMatrix: negative shape");
  }

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> row(index_t r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(index_t r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const RowMatrix& a, const RowMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<double> data_;
};

// out += a * x
inline void axpy(std::span<double> out, double a, std::span<const double> x) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += a * x[k];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Gradient accumulator that only materializes touched rows. Rows are kept in
// first-touch order; clear() keeps capacity so one instance can be reused
// across batches.
class SparseRowGrad {
 public:
  SparseRowGrad(index_t num_rows, index_t dim)
      : dim_(dim), slot_(static_cast<std::size_t>(num_rows), -1) {}

  index_t dim() const { return dim_; }
  const std::vector<index_t>& touched() const { return touched_; }

  std::span<double> row(index_t r) {
    std::int64_t s = slot_[static_cast<std::size_t>(r)];
    if (s < 0) {
      s = static_cast<std::int64_t>(touched_.size());
      slot_[static_cast<std::size_t>(r)] = s;
      touched_.push_back(r);
      data_.resize(data_.size() + static_cast<std::size_t>(dim_), 0.0);
    }
    return {data_.data() + static_cast<std::size_t>(s) * dim_, static_cast<std::size_t>(dim_)};
  }

  std::span<const double> row_of(index_t r) const {
    std::int64_t s = slot_[static_cast<std::size_t>(r)];
    require(s >= 0, "SparseRowGrad: row not present");
    return {data_.data() + static_cast<std::size_t>(s) * dim_, static_cast<std::size_t>(dim_)};
  }

  bool contains(index_t r) const { return slot_[static_cast<std::size_t>(r)] >= 0; }

  void clear() {
    for (index_t r : touched_) slot_[static_cast<std::size_t>(r)] = -1;
    touched_.clear();
    data_.clear();
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  index_t dim_ = 0;
  std::vector<std::int64_t> slot_;
  std::vector<index_t> touched_;
  std::vector<double> data_;
};

}  // namespace cfrank
