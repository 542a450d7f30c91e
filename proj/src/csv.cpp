#include "unida/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace unida {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_double: bad value '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_int: bad value '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += fields[i];
  }
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  const int c = column(name);
  if (c < 0) {
    std::string have = join_csv(header);
    throw std::runtime_error("csv: missing column '" + name + "' (have: " + have + ")");
  }
  return c;
}

double CsvTable::cell_double(std::size_t row, int col) const {
  return parse_double(rows.at(row).at(static_cast<std::size_t>(col)));
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    if (!have_header) {
      t.header = split_csv_line(line);
      have_header = true;
    } else {
      auto row = split_csv_line(line);
      if (row.size() != t.header.size())
        throw std::runtime_error("read_csv: row width " + std::to_string(row.size()) +
                                 " != header width " + std::to_string(t.header.size()) +
                                 " in " + path);
      t.rows.push_back(std::move(row));
    }
  }
  if (!have_header) throw std::runtime_error("read_csv: no header in " + path);
  return t;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (const auto& c : table.comments) out << '#' << c << '\n';
  out << join_csv(table.header) << '\n';
  for (const auto& r : table.rows) out << join_csv(r) << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

CsvWriter::CsvWriter(std::string path, std::string version_comment,
                     std::vector<std::string> header)
    : path_(std::move(path)) {
  table_.comments.push_back(std::move(version_comment));
  table_.header = std::move(header);
}

void CsvWriter::append(const std::vector<std::string>& row) {
  if (row.size() != table_.header.size())
    throw std::runtime_error("CsvWriter: row width mismatch for " + path_);
  table_.rows.push_back(row);
}

void CsvWriter::flush() { write_csv(table_, path_); }

}  // namespace unida
