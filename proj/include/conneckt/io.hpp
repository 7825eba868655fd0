#pragma once

// Text formats shared by the library and the CLI.
//
//   fluorescence  one row per time sample, comma-separated neuron columns
//   network       "i,j,w" per line, 1-based; edge iff w > 0
//   association   "i,j,score" per line, 1-based, every off-diagonal pair
//   curve         "x,y" per line
//
// Numbers are rendered and parsed with <charconv>, so the "." decimal
// separator is used whatever the process locale.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conneckt/error.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "read failure on '" + path + "'");
  return std::move(buf).str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failure on '" + path + "'");
}

/// Splits text into lines on '\n'. A trailing '\r' is dropped from each line
/// and a final empty line (file ending in '\n') is not reported.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::string location(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline double parse_real(std::string_view token, std::size_t line,
                         std::size_t column) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.empty()) {
    fail(ErrorKind::Parse, location(line, column) + ": cannot parse '" +
                               std::string(token) + "' as a number");
  }
  if (!std::isfinite(value)) {
    fail(ErrorKind::Parse, location(line, column) + ": non-finite value '" +
                               std::string(token) + "'");
  }
  return value;
}

inline long long parse_integer(std::string_view token, std::size_t line,
                               std::size_t column) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  long long value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.empty()) {
    fail(ErrorKind::Parse, location(line, column) + ": cannot parse '" +
                               std::string(token) + "' as an integer");
  }
  return value;
}

inline bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace detail

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// `%g`-style rendering with the given number of significant digits.
inline std::string format_real(double v, int significant) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::general, significant);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Fluorescence

inline FluorescenceRecording parse_fluorescence(std::string_view text) {
  const auto lines = detail::split_lines(text);
  std::size_t rows = lines.size();
  while (rows > 0 && detail::is_blank(lines[rows - 1])) --rows;
  if (rows == 0) fail(ErrorKind::Format, "fluorescence file has no samples");

  const std::size_t p = detail::split_fields(lines[0]).size();
  std::vector<double> flat;
  flat.reserve(rows * p);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = detail::split_fields(lines[r]);
    if (fields.size() != p) {
      fail(ErrorKind::Format,
           "row " + std::to_string(r + 1) + " has " +
               std::to_string(fields.size()) + " column" +
               (fields.size() == 1 ? "" : "s") + ", expected " +
               std::to_string(p));
    }
    for (std::size_t c = 0; c < p; ++c) {
      flat.push_back(detail::parse_real(fields[c], r + 1, c + 1));
    }
  }

  FluorescenceRecording rec;
  rec.values.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      rec.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) =
          flat[r * p + c];
    }
  }
  rec.time_offset = 0;
  return rec;
}

inline FluorescenceRecording load_fluorescence(const std::string& path) {
  return parse_fluorescence(detail::read_file(path));
}

inline std::string render_fluorescence(const Recording& rec) {
  std::string out;
  const auto p = rec.values.rows();
  const auto T = rec.values.cols();
  out.reserve(static_cast<std::size_t>(p * T) * 8);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != 0) out.push_back(',');
      out += format_real(rec.values(i, t));
    }
    out.push_back('\n');
  }
  return out;
}

inline void save_fluorescence(const Recording& rec, const std::string& path) {
  detail::write_file(path, render_fluorescence(rec));
}

// ---------------------------------------------------------------------------
// Networks

struct NetworkLoad {
  Network network;
  std::size_t ignored_self_loops = 0;
};

inline NetworkLoad parse_network(std::string_view text, std::size_t p) {
  NetworkLoad result{Network(p), 0};
  const auto lines = detail::split_lines(text);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (detail::is_blank(lines[l])) continue;
    const auto fields = detail::split_fields(lines[l]);
    if (fields.size() != 3) {
      fail(ErrorKind::Parse, "line " + std::to_string(l + 1) +
                                 ": expected 'i,j,w', got " +
                                 std::to_string(fields.size()) + " field(s)");
    }
    const auto from = detail::parse_integer(fields[0], l + 1, 1);
    const auto to = detail::parse_integer(fields[1], l + 1, 2);
    const double weight = detail::parse_real(fields[2], l + 1, 3);
    for (auto idx : {from, to}) {
      if (idx < 1 || static_cast<unsigned long long>(idx) > p) {
        fail(ErrorKind::Range, "line " + std::to_string(l + 1) + ": index " +
                                   std::to_string(idx) + " outside [1, " +
                                   std::to_string(p) + "]");
      }
    }
    if (from == to) {
      ++result.ignored_self_loops;
      continue;
    }
    if (weight > 0.0) {
      result.network.add_edge(static_cast<std::size_t>(from - 1),
                              static_cast<std::size_t>(to - 1));
    }
  }
  return result;
}

inline NetworkLoad load_network(const std::string& path, std::size_t p) {
  return parse_network(detail::read_file(path), p);
}

inline std::string render_network(const Network& net) {
  std::string out;
  for (const auto& [from, to] : net.edges()) {
    out += std::to_string(from + 1) + "," + std::to_string(to + 1) + ",1\n";
  }
  return out;
}

inline void save_network(const Network& net, const std::string& path) {
  detail::write_file(path, render_network(net));
}

// ---------------------------------------------------------------------------
// Association matrices

inline constexpr int kAssociationDigits = 6;

inline std::string render_association(const AssociationMatrix& m) {
  std::string out;
  const auto p = m.scores.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i == j) continue;
      out += std::to_string(i + 1);
      out.push_back(',');
      out += std::to_string(j + 1);
      out.push_back(',');
      out += format_real(m.scores(i, j), kAssociationDigits);
      out.push_back('\n');
    }
  }
  return out;
}

inline void save_association(const AssociationMatrix& m, const std::string& path) {
  detail::write_file(path, render_association(m));
}

/// Inverse of render_association. p is the largest index seen; every
/// off-diagonal pair must appear exactly once.
inline AssociationMatrix parse_association(std::string_view text) {
  struct Entry {
    long long i, j;
    double score;
    std::size_t line;
  };
  std::vector<Entry> entries;
  long long p = 0;
  const auto lines = detail::split_lines(text);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (detail::is_blank(lines[l])) continue;
    const auto fields = detail::split_fields(lines[l]);
    if (fields.size() != 3) {
      fail(ErrorKind::Parse, "line " + std::to_string(l + 1) +
                                 ": expected 'i,j,score', got " +
                                 std::to_string(fields.size()) + " field(s)");
    }
    Entry e{detail::parse_integer(fields[0], l + 1, 1),
            detail::parse_integer(fields[1], l + 1, 2),
            detail::parse_real(fields[2], l + 1, 3), l + 1};
    if (e.i < 1 || e.j < 1) {
      fail(ErrorKind::Range,
           "line " + std::to_string(l + 1) + ": indices are 1-based");
    }
    if (e.i == e.j) {
      fail(ErrorKind::Format,
           "line " + std::to_string(l + 1) + ": diagonal entry not allowed");
    }
    p = std::max({p, e.i, e.j});
    entries.push_back(e);
  }

  AssociationMatrix m;
  m.scores = Eigen::MatrixXd::Zero(p, p);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, p, false);
  for (const auto& e : entries) {
    if (seen(e.i - 1, e.j - 1)) {
      fail(ErrorKind::Format, "line " + std::to_string(e.line) +
                                  ": duplicate pair (" + std::to_string(e.i) +
                                  "," + std::to_string(e.j) + ")");
    }
    seen(e.i - 1, e.j - 1) = true;
    m.scores(e.i - 1, e.j - 1) = e.score;
  }
  const auto expected = static_cast<std::size_t>(p * (p - 1));
  if (entries.size() != expected) {
    fail(ErrorKind::Format, "association file has " +
                                std::to_string(entries.size()) +
                                " pairs, expected " + std::to_string(expected) +
                                " for " + std::to_string(p) + " neurons");
  }
  m.symmetric = m.scores == m.scores.transpose();
  return m;
}

inline AssociationMatrix load_association(const std::string& path) {
  return parse_association(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Curves

using CurvePoint = std::pair<double, double>;

inline std::string render_curve(const std::vector<CurvePoint>& points) {
  std::string out;
  for (const auto& [x, y] : points) {
    out += format_real(x);
    out.push_back(',');
    out += format_real(y);
    out.push_back('\n');
  }
  return out;
}

inline void save_curve(const std::vector<CurvePoint>& points,
                       const std::string& path) {
  detail::write_file(path, render_curve(points));
}

}  // namespace conneckt
