#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btf/state.hpp"
#include "btf/tensor.hpp"

namespace btf {

// Doubles are always printed with %.17g so that identical runs produce
// byte-identical files.
std::string fmt_double(double v);

// Minimal CSV: comma-separated, no quoting, first row is the header.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
// Write via a temp file + rename.
void write_text_file_atomic(const std::string& path, const std::string& content);

// Long-format observations: header row,col,dose,replicate,value.
std::vector<LongRecord> read_long_csv(const std::string& path);
void write_long_csv(const std::string& path, const std::vector<LongRecord>& rows);

// Ground-truth curves: header row,col,dose,value.
struct TruthRecord {
  int row = 0, col = 0, dose = 0;
  double value = 0.0;
};
std::vector<TruthRecord> read_truth_csv(const std::string& path);
void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& rows);

// Posterior snapshots, flattened with index columns.
void write_snapshots_csv(const std::string& w_path, const std::string& v_path,
                         const PosteriorSamples& samples);
// Reads snapshots back; dims inferred from the index columns.
PosteriorSamples read_snapshots_csv(const std::string& w_path, const std::string& v_path);

// Flat key = value config with [section] headers; keys are returned as
// "section.key". '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

}  // namespace btf
