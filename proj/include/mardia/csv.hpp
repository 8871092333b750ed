#pragma once

// CSV ingestion/export for time series: one column per component, one row per
// time step, optional header row, '.' decimal point, no thousands separators.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mardia/error.hpp"
#include "mardia/stats_core.hpp"

namespace mardia::csv {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::optional<double> parse_number(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

struct Table {
  std::vector<std::string> header;  ///< empty when the file had no header row
  TimeSeries series;
};

inline Table read(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line);
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      auto v = detail::parse_number(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && header.empty()) {
        for (auto f : fields) header.emplace_back(f);
        width = fields.size();
        continue;
      }
      throw Error(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw Error(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(width) + " columns, got " + std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::Parse, source + ": no data rows");

  Matrix data(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (std::size_t a = 0; a < width; ++a) {
      data(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(n)) = rows[n][a];
    }
  }
  return Table{std::move(header), TimeSeries(std::move(data))};
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return read(in, path);
}

/// Round-trip exact output (17 significant digits).
inline void write(std::ostream& out, const TimeSeries& x, const std::vector<std::string>& header = {}) {
  if (!header.empty()) {
    if (header.size() != x.dim()) throw Error(ErrorCode::InvalidArgument, "header width mismatch");
    for (std::size_t a = 0; a < header.size(); ++a) out << (a ? "," : "") << header[a];
    out << '\n';
  }
  char buf[32];
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t a = 0; a < x.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", x.data()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(n)));
      out << (a ? "," : "") << buf;
    }
    out << '\n';
  }
}

inline void write_file(const std::string& path, const TimeSeries& x, const std::vector<std::string>& header = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write(out, x, header);
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

}  // namespace mardia::csv
