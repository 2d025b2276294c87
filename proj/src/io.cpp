#include "btf/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace btf {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  write_text_file(tmp, content);
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed for " + path);
}

std::vector<LongRecord> read_long_csv(const std::string& path) {
  auto rows = read_csv_rows(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"row", "col", "dose", "replicate",
                                                          "value"})
    throw std::runtime_error(path + ": expected header row,col,dose,replicate,value");
  std::vector<LongRecord> out;
  out.reserve(rows.size() - 1);
  for (size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != 5) throw std::runtime_error(path + ": malformed line");
    out.push_back({std::stoi(rows[k][0]), std::stoi(rows[k][1]), std::stoi(rows[k][2]),
                   std::stoi(rows[k][3]), std::stod(rows[k][4])});
  }
  return out;
}

void write_long_csv(const std::string& path, const std::vector<LongRecord>& rows) {
  std::string out = "row,col,dose,replicate,value\n";
  for (const auto& r : rows)
    out += std::to_string(r.row) + "," + std::to_string(r.col) + "," + std::to_string(r.dose) +
           "," + std::to_string(r.replicate) + "," + fmt_double(r.value) + "\n";
  write_text_file(path, out);
}

std::vector<TruthRecord> read_truth_csv(const std::string& path) {
  auto rows = read_csv_rows(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"row", "col", "dose", "value"})
    throw std::runtime_error(path + ": expected header row,col,dose,value");
  std::vector<TruthRecord> out;
  for (size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != 4) throw std::runtime_error(path + ": malformed line");
    out.push_back(
        {std::stoi(rows[k][0]), std::stoi(rows[k][1]), std::stoi(rows[k][2]), std::stod(rows[k][3])});
  }
  return out;
}

void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& rows) {
  std::string out = "row,col,dose,value\n";
  for (const auto& r : rows)
    out += std::to_string(r.row) + "," + std::to_string(r.col) + "," + std::to_string(r.dose) +
           "," + fmt_double(r.value) + "\n";
  write_text_file(path, out);
}

void write_snapshots_csv(const std::string& w_path, const std::string& v_path,
                         const PosteriorSamples& samples) {
  std::string w_out = "sweep,row,dim,value\n";
  std::string v_out = "sweep,col,dose,dim,value\n";
  for (size_t s = 0; s < samples.draws.size(); ++s) {
    const FactorState& st = samples.draws[s];
    for (int i = 0; i < st.N(); ++i)
      for (int d = 0; d < st.D(); ++d)
        w_out += std::to_string(s) + "," + std::to_string(i) + "," + std::to_string(d) + "," +
                 fmt_double(st.W(i, d)) + "\n";
    for (int j = 0; j < st.M(); ++j)
      for (int t = 0; t < st.T(); ++t)
        for (int d = 0; d < st.D(); ++d)
          v_out += std::to_string(s) + "," + std::to_string(j) + "," + std::to_string(t) + "," +
                   std::to_string(d) + "," + fmt_double(st.V[j](t, d)) + "\n";
  }
  write_text_file(w_path, w_out);
  write_text_file(v_path, v_out);
}

PosteriorSamples read_snapshots_csv(const std::string& w_path, const std::string& v_path) {
  auto w_rows = read_csv_rows(w_path);
  auto v_rows = read_csv_rows(v_path);
  if (w_rows.empty() || v_rows.empty())
    throw std::runtime_error("read_snapshots_csv: empty snapshot file");
  int S = 0, N = 0, D = 0, M = 0, T = 0;
  for (size_t k = 1; k < w_rows.size(); ++k) {
    S = std::max(S, std::stoi(w_rows[k][0]) + 1);
    N = std::max(N, std::stoi(w_rows[k][1]) + 1);
    D = std::max(D, std::stoi(w_rows[k][2]) + 1);
  }
  for (size_t k = 1; k < v_rows.size(); ++k) {
    M = std::max(M, std::stoi(v_rows[k][1]) + 1);
    T = std::max(T, std::stoi(v_rows[k][2]) + 1);
  }
  PosteriorSamples out;
  out.draws.assign(S, FactorState(N, M, T, D));
  for (size_t k = 1; k < w_rows.size(); ++k)
    out.draws[std::stoi(w_rows[k][0])].W(std::stoi(w_rows[k][1]), std::stoi(w_rows[k][2])) =
        std::stod(w_rows[k][3]);
  for (size_t k = 1; k < v_rows.size(); ++k)
    out.draws[std::stoi(v_rows[k][0])].V[std::stoi(v_rows[k][1])](
        std::stoi(v_rows[k][2]), std::stoi(v_rows[k][3])) = std::stod(v_rows[k][4]);
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line, section;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return std::string();
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config: malformed line: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config: empty key in line: " + line);
    out[section.empty() ? key : section + "." + key] = val;
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace btf
