#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace va {

// A rectangular table of string cells with a mandatory header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t width() const noexcept { return header.size(); }
    std::size_t height() const noexcept { return rows.size(); }
    std::optional<std::size_t> column(std::string_view name) const;
    // Throws SchemaError when absent.
    std::size_t require_column(std::string_view name) const;
};

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF,
// optional UTF-8 BOM. Rows shorter or longer than the header are a FormatError.
Table read_csv(std::istream &in);
Table read_csv(std::string_view text);
Table read_csv_file(const std::filesystem::path &path);

// Streaming record counter used when truncating downloads: returns the number
// of complete records (header included) in `text`, and the byte offset just
// past the last complete record.
struct RecordScan {
    std::size_t records = 0;
    std::size_t end_offset = 0;
};
RecordScan scan_records(std::string_view text, std::size_t max_records);

std::string csv_escape(std::string_view cell);
void write_csv_row(std::ostream &out, const std::vector<std::string> &cells);
void write_csv(std::ostream &out, const Table &table);
std::string to_csv_string(const Table &table);

// Writes `contents` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path &path, std::string_view contents);
std::string read_file(const std::filesystem::path &path);

// Locale-independent shortest round-trip formatting of a double.
std::string format_double(double value);
// Fixed-significant-digit formatting used by reports and plots.
std::string format_double(double value, int significant_digits);

} // namespace va
