#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "sfv/core/error.hpp"

namespace sfv::io {

inline constexpr int kReportSchemaVersion = 1;

// Shortest decimal that round-trips, always with '.' as separator.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw Error("number formatting failed");
  return {buf, res.ptr};
}

// Tabular report with a declared header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& add(std::string_view s) {
      cells_.emplace_back(s);
      return *this;
    }
    Row& add(const char* s) { return add(std::string_view(s)); }
    Row& add(const std::string& s) { return add(std::string_view(s)); }
    Row& add(double v) {
      cells_.push_back(format_number(v));
      return *this;
    }
    template <typename Int>
      requires std::is_integral_v<Int>
    Row& add(Int v) {
      cells_.push_back(std::to_string(v));
      return *this;
    }
    std::vector<std::string> take() { return std::move(cells_); }

   private:
    std::vector<std::string> cells_;
  };

  void add_row(Row row) {
    auto cells = row.take();
    if (cells.size() != header_.size())
      throw InputError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header_.size()));
    rows_.push_back(std::move(cells));
  }

  std::size_t size() const noexcept { return rows_.size(); }

  std::string to_string() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

 private:
  static void append_cell(std::string& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
      out += cell;
      return;
    }
    out += '"';
    for (char c : cell) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      append_cell(out, cells[i]);
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text(path, table.to_string());
}

// Minimal CSV reader for the manifests this project writes: header row,
// comma-separated cells, double-quote escaping.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      cell += c;
    }
  }
  if (any) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sfv::io
