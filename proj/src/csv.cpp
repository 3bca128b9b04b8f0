#include "rrmix/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rrmix {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto begin = cell.find_first_not_of(" \t\r");
    const auto end = cell.find_last_not_of(" \t\r");
    cells.push_back(begin == std::string::npos ? "" : cell.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

void center_columns(Matrix& m) {
  for (int j = 0; j < m.cols(); ++j) m.col(j).array() -= m.col(j).mean();
}

}  // namespace

void CsvSchema::validate() const {
  if (response_columns.empty()) throw InvalidInput("csv schema: no response columns named");
}

Dataset ingest(const std::string& path, const CsvSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw InvalidInput("ingest: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("ingest: empty file " + path);
  const std::vector<std::string> header = split_line(line);

  std::vector<int> response_idx;
  for (const std::string& name : schema.response_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidInput("ingest: response column '" + name + "' not found");
    response_idx.push_back(static_cast<int>(it - header.begin()));
  }
  int label_idx = -1;
  {
    const auto it = std::find(header.begin(), header.end(), schema.label_column);
    if (it != header.end()) label_idx = static_cast<int>(it - header.begin());
  }
  std::vector<int> predictor_idx;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (j == label_idx) continue;
    if (std::find(response_idx.begin(), response_idx.end(), j) != response_idx.end()) continue;
    predictor_idx.push_back(j);
  }
  if (predictor_idx.empty()) throw InvalidInput("ingest: no predictor columns left");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> bad_cells;
  int row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw InvalidInput("ingest: row " + std::to_string(row_number) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()));
    std::vector<double> values(cells.size(), 0.0);
    for (int j = 0; j < static_cast<int>(cells.size()); ++j) {
      if (cells[j].empty()) {
        bad_cells.push_back("line " + std::to_string(row_number) + " column '" + header[j] +
                            "' (missing)");
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (res.ec != std::errc{} || res.ptr != cells[j].data() + cells[j].size()) {
        bad_cells.push_back("line " + std::to_string(row_number) + " column '" + header[j] +
                            "' (non-numeric: '" + cells[j] + "')");
        continue;
      }
      values[j] = v;
    }
    rows.push_back(std::move(values));
    if (label_idx >= 0) labels.push_back(static_cast<int>(rows.back()[label_idx]));
  }
  if (!bad_cells.empty()) {
    std::string what = "ingest: unusable cells:";
    const std::size_t shown = std::min<std::size_t>(bad_cells.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) what += " " + bad_cells[i] + ";";
    if (bad_cells.size() > shown)
      what += " and " + std::to_string(bad_cells.size() - shown) + " more";
    throw InvalidInput(what);
  }
  if (rows.empty()) throw InvalidInput("ingest: no data rows in " + path);

  const int n = static_cast<int>(rows.size());
  const int p0 = static_cast<int>(predictor_idx.size());
  Matrix X0(n, p0);
  Matrix Y(n, static_cast<int>(response_idx.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p0; ++j) X0(i, j) = rows[i][predictor_idx[j]];
    for (int z = 0; z < static_cast<int>(response_idx.size()); ++z)
      Y(i, z) = rows[i][response_idx[z]];
  }

  Matrix X;
  if (schema.expand_second_order) {
    // x_1..x_p, squares, pairwise products, and an intercept column
    const int pairs = p0 * (p0 - 1) / 2;
    const int expanded = 2 * p0 + pairs + (schema.center ? 0 : 1);
    X.resize(n, expanded);
    int col = 0;
    for (int j = 0; j < p0; ++j) X.col(col++) = X0.col(j);
    for (int j = 0; j < p0; ++j) X.col(col++) = X0.col(j).cwiseProduct(X0.col(j));
    for (int a = 0; a < p0; ++a)
      for (int b = a + 1; b < p0; ++b) X.col(col++) = X0.col(a).cwiseProduct(X0.col(b));
    if (!schema.center) X.col(col++).setOnes();
  } else {
    X = std::move(X0);
  }
  if (schema.center) {
    center_columns(X);
    center_columns(Y);
  }

  Dataset ds;
  ds.X = std::move(X);
  ds.Y = std::move(Y);
  ds.true_labels = std::move(labels);
  ds.validate();
  return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("write_dataset_csv: cannot open " + path);
  const bool labeled = !data.true_labels.empty();
  for (int z = 0; z < data.q(); ++z) out << "y" << (z + 1) << ",";
  for (int j = 0; j < data.p(); ++j) {
    out << "x" << (j + 1);
    if (j + 1 < data.p() || labeled) out << ",";
  }
  if (labeled) out << "label";
  out << "\n";
  char buf[32];
  for (int i = 0; i < data.n(); ++i) {
    for (int z = 0; z < data.q(); ++z) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.Y(i, z));
      out << buf << ",";
    }
    for (int j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.X(i, j));
      out << buf;
      if (j + 1 < data.p() || labeled) out << ",";
    }
    if (labeled) out << data.true_labels[i];
    out << "\n";
  }
}

}  // namespace rrmix
