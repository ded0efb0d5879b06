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

#include "crl/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "crl/common/error.hpp"

namespace crl::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, p);
}

}  // namespace

std::string format_metric(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

MetricsLog::MetricsLog(const std::filesystem::path& path, std::vector<std::string> columns)
    : path_(path), columns_(std::move(columns)), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IOError("metrics: cannot open '" + path.string() + "'");
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << '\n';
  out_.flush();
}

void MetricsLog::append(const std::vector<double>& row) {
  if (row.size() != columns_.size()) throw IOError("metrics: row width does not match the header");
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row[i])) {
      throw IOError("metrics: non-finite value in column '" + columns_[i] + "' of row " + std::to_string(rows_) +
                    " (" + path_.string() + ")");
    }
  }
  for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << format_metric(row[i]);
  out_ << '\n';
  out_.flush();
  if (!out_) throw IOError("metrics: write failed for '" + path_.string() + "'");
  ++rows_;
}

std::vector<double> Table::column(std::size_t i) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(i));
  return out;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("csv: cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty file '" + path.string() + "'");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) {
        throw FormatError("csv: bad number '" + cell + "' at line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) throw FormatError("csv: ragged row at line " + std::to_string(line_no));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string svg_chart(const std::vector<double>& x, const std::vector<double>& y, const std::string& x_label,
                      const std::string& y_label) {
  if (x.size() != y.size()) throw FormatError("svg: x and y lengths differ");
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (!x.empty()) {
    const auto [xa, xb] = std::minmax_element(x.begin(), x.end());
    const auto [ya, yb] = std::minmax_element(y.begin(), y.end());
    x0 = *xa, x1 = *xb, y0 = *ya, y1 = *yb;
  }
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  const auto py = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
    << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n"
    << "</g>\n"
    << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 15 << "\" text-anchor=\"start\">" << format_metric(x0)
    << "</text>\n"
    << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 15 << "\" text-anchor=\"end\">" << format_metric(x1)
    << "</text>\n"
    << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + ph << "\" text-anchor=\"end\">" << format_metric(y0)
    << "</text>\n"
    << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\">" << format_metric(y1)
    << "</text>\n"
    << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n"
    << "<text x=\"15\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << kTop + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n"
    << "</g>\n";
  if (x.size() == 1) {
    s << "<circle cx=\"" << num(px(x[0])) << "\" cy=\"" << num(py(y[0])) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  } else if (!x.empty()) {
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) s << (i ? " " : "") << num(px(x[i])) << "," << num(py(y[i]));
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<std::filesystem::path> plot_csv(const std::filesystem::path& csv) {
  const Table t = read_csv(csv);
  std::vector<std::filesystem::path> out;
  if (t.columns.empty()) return out;
  const std::vector<double> x = t.column(0);
  for (std::size_t c = 1; c < t.columns.size(); ++c) {
    std::filesystem::path p = csv.parent_path() / (csv.stem().string() + "_" + t.columns[c] + ".svg");
    write_text(p, svg_chart(x, t.column(c), t.columns[0], t.columns[c]));
    out.push_back(std::move(p));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IOError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IOError("write failed for '" + path.string() + "'");
}

}  // namespace crl::cli
