#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace btf {

// One observed replicate in long format.
struct LongRecord {
  int row = 0;
  int col = 0;
  int dose = 0;
  int replicate = 0;
  double value = 0.0;
};

// Dense N x M x T x R value array with an observation mask. Cells where the
// mask is false carry no information and are never read by the samplers.
class ObservationTensor {
 public:
  ObservationTensor() = default;
  ObservationTensor(int N, int M, int T, int R);

  static ObservationTensor from_long_format(std::span<const LongRecord> rows);
  std::vector<LongRecord> to_long_format() const;

  int N() const { return N_; }
  int M() const { return M_; }
  int T() const { return T_; }
  int R() const { return R_; }

  double value(int i, int j, int t, int r) const { return values_[index(i, j, t, r)]; }
  bool observed(int i, int j, int t, int r) const { return mask_[index(i, j, t, r)] != 0; }
  void set(int i, int j, int t, int r, double v);
  void unset(int i, int j, int t, int r) { mask_[index(i, j, t, r)] = 0; }

  bool cell_observed(int i, int j, int t) const;  // any replicate observed
  long observed_count() const;

  // Throws unless every row and column has at least one observed cell.
  void validate_coverage() const;

 private:
  size_t index(int i, int j, int t, int r) const;
  int N_ = 0, M_ = 0, T_ = 0, R_ = 0;
  std::vector<double> values_;
  std::vector<uint8_t> mask_;
};

// Flat index of every observed (i,j,t) cell with its replicate values packed
// together. Built once per fit; all update kernels iterate this.
struct CellObs {
  int i, j, t;
  int count;       // observed replicates
  double sum;      // sum of replicate values
  int offset;      // into ObsIndex::packed
};

struct ObsIndex {
  std::vector<CellObs> cells;
  std::vector<double> packed;
  std::vector<std::vector<int>> by_row;  // cell indices per row i
  std::vector<std::vector<int>> by_col;  // cell indices per column j

  static ObsIndex build(const ObservationTensor& y);
  std::span<const double> values(const CellObs& c) const {
    return {packed.data() + c.offset, static_cast<size_t>(c.count)};
  }
};

}  // namespace btf
