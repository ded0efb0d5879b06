// Copyright 2026 The CRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRL_CLI_OUTPUT_HPP_
#define CRL_CLI_OUTPUT_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace crl::cli {

// Append-only CSV with a header fixed at construction. A non-finite value
// throws IOError naming the column instead of being written.
class MetricsLog {
 public:
  MetricsLog(const std::filesystem::path& path, std::vector<std::string> columns);
  void append(const std::vector<double>& row);
  const std::vector<std::string>& columns() const { return columns_; }
  int rows() const { return rows_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> columns_;
  std::ofstream out_;
  int rows_ = 0;
};

// Shortest round-trip decimal form.
std::string format_metric(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(std::size_t i) const;
};

// Reads a numeric CSV written by MetricsLog. Throws FormatError.
Table read_csv(const std::filesystem::path& path);

// Line chart of y against x with axes fitted to the data range; a single
// point is drawn as a marker.
std::string svg_chart(const std::vector<double>& x, const std::vector<double>& y, const std::string& x_label,
                      const std::string& y_label);

// One chart per column after the first, named <csv stem>_<column>.svg next to
// the CSV. Returns the written paths.
std::vector<std::filesystem::path> plot_csv(const std::filesystem::path& csv);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace crl::cli

#endif  // CRL_CLI_OUTPUT_HPP_
