#include "btf/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace btf {

ObservationTensor::ObservationTensor(int N, int M, int T, int R) : N_(N), M_(M), T_(T), R_(R) {
  if (N <= 0 || M <= 0 || T <= 0 || R <= 0)
    throw std::invalid_argument("ObservationTensor: dimensions must be positive");
  values_.assign(static_cast<size_t>(N) * M * T * R, 0.0);
  mask_.assign(values_.size(), 0);
}

size_t ObservationTensor::index(int i, int j, int t, int r) const {
  if (i < 0 || i >= N_ || j < 0 || j >= M_ || t < 0 || t >= T_ || r < 0 || r >= R_)
    throw std::out_of_range("ObservationTensor: index out of range");
  return ((static_cast<size_t>(i) * M_ + j) * T_ + t) * R_ + r;
}

void ObservationTensor::set(int i, int j, int t, int r, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("ObservationTensor: non-finite value");
  size_t k = index(i, j, t, r);
  values_[k] = v;
  mask_[k] = 1;
}

bool ObservationTensor::cell_observed(int i, int j, int t) const {
  for (int r = 0; r < R_; ++r)
    if (observed(i, j, t, r)) return true;
  return false;
}

long ObservationTensor::observed_count() const {
  long n = 0;
  for (uint8_t m : mask_) n += m;
  return n;
}

ObservationTensor ObservationTensor::from_long_format(std::span<const LongRecord> rows) {
  if (rows.empty()) throw std::invalid_argument("from_long_format: no records");
  int N = 0, M = 0, T = 0, R = 0;
  for (const auto& rec : rows) {
    if (rec.row < 0 || rec.col < 0 || rec.dose < 0 || rec.replicate < 0)
      throw std::invalid_argument("from_long_format: negative index");
    if (!std::isfinite(rec.value))
      throw std::invalid_argument("from_long_format: non-finite value at (" +
                                  std::to_string(rec.row) + "," + std::to_string(rec.col) + "," +
                                  std::to_string(rec.dose) + "," + std::to_string(rec.replicate) +
                                  ")");
    N = std::max(N, rec.row + 1);
    M = std::max(M, rec.col + 1);
    T = std::max(T, rec.dose + 1);
    R = std::max(R, rec.replicate + 1);
  }
  ObservationTensor out(N, M, T, R);
  std::unordered_set<size_t> seen;
  for (const auto& rec : rows) {
    size_t k = out.index(rec.row, rec.col, rec.dose, rec.replicate);
    if (!seen.insert(k).second)
      throw std::invalid_argument("from_long_format: duplicate key (" + std::to_string(rec.row) +
                                  "," + std::to_string(rec.col) + "," + std::to_string(rec.dose) +
                                  "," + std::to_string(rec.replicate) + ")");
    out.set(rec.row, rec.col, rec.dose, rec.replicate, rec.value);
  }
  return out;
}

std::vector<LongRecord> ObservationTensor::to_long_format() const {
  std::vector<LongRecord> out;
  out.reserve(static_cast<size_t>(observed_count()));
  for (int i = 0; i < N_; ++i)
    for (int j = 0; j < M_; ++j)
      for (int t = 0; t < T_; ++t)
        for (int r = 0; r < R_; ++r)
          if (observed(i, j, t, r)) out.push_back({i, j, t, r, value(i, j, t, r)});
  return out;
}

void ObservationTensor::validate_coverage() const {
  std::vector<char> row_ok(N_, 0), col_ok(M_, 0);
  for (int i = 0; i < N_; ++i)
    for (int j = 0; j < M_; ++j)
      for (int t = 0; t < T_; ++t)
        if (cell_observed(i, j, t)) {
          row_ok[i] = 1;
          col_ok[j] = 1;
        }
  for (int i = 0; i < N_; ++i)
    if (!row_ok[i])
      throw std::invalid_argument("tensor: row " + std::to_string(i) + " has no observations");
  for (int j = 0; j < M_; ++j)
    if (!col_ok[j])
      throw std::invalid_argument("tensor: column " + std::to_string(j) + " has no observations");
}

ObsIndex ObsIndex::build(const ObservationTensor& y) {
  ObsIndex idx;
  idx.by_row.resize(y.N());
  idx.by_col.resize(y.M());
  for (int i = 0; i < y.N(); ++i)
    for (int j = 0; j < y.M(); ++j)
      for (int t = 0; t < y.T(); ++t) {
        int count = 0;
        double sum = 0.0;
        int offset = static_cast<int>(idx.packed.size());
        for (int r = 0; r < y.R(); ++r)
          if (y.observed(i, j, t, r)) {
            idx.packed.push_back(y.value(i, j, t, r));
            sum += y.value(i, j, t, r);
            ++count;
          }
        if (count > 0) {
          int cell = static_cast<int>(idx.cells.size());
          idx.cells.push_back({i, j, t, count, sum, offset});
          idx.by_row[i].push_back(cell);
          idx.by_col[j].push_back(cell);
        }
      }
  return idx;
}

}  // namespace btf
