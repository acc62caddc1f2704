#include "va/csv.hpp"
#include "va/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace va {

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
    if (auto idx = column(name)) {
        return *idx;
    }
    throw SchemaError("column '" + std::string(name) + "' not found in table header");
}

namespace {

// Parses records from `text`; each completed record is handed to `sink`.
// Returns the offset one past the last consumed record.
template <typename Sink> std::size_t parse_records(std::string_view text, Sink &&sink) {
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t last_end = 0;
    std::size_t i = 0;

    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        i = 3;
        last_end = 3;
    }

    auto finish_record = [&](std::size_t end) -> bool {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        bool keep_going = sink(std::move(record));
        record.clear();
        last_end = end;
        return keep_going;
    };

    for (; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            if (!finish_record(i + 1)) {
                return last_end;
            }
            break;
        case '\n':
            if (!finish_record(i + 1)) {
                return last_end;
            }
            break;
        default:
            field.push_back(ch);
            field_started = true;
            break;
        }
    }
    if (in_quotes) {
        throw FormatError("unterminated quoted field at end of CSV input");
    }
    if (field_started || !record.empty()) {
        finish_record(text.size());
    }
    return last_end;
}

} // namespace

Table read_csv(std::string_view text) {
    Table table;
    bool have_header = false;
    std::size_t line = 0;
    parse_records(text, [&](std::vector<std::string> &&record) {
        ++line;
        if (!have_header) {
            table.header = std::move(record);
            have_header = true;
            return true;
        }
        // A lone empty line is not a record.
        if (record.size() == 1 && record[0].empty() && table.header.size() != 1) {
            return true;
        }
        if (record.size() != table.header.size()) {
            throw FormatError("CSV record " + std::to_string(line) + " has " +
                              std::to_string(record.size()) + " fields, header has " +
                              std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(record));
        return true;
    });
    if (!have_header) {
        throw FormatError("CSV input is empty: a header row is mandatory");
    }
    return table;
}

Table read_csv(std::istream &in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_csv(std::string_view(buffer.str()));
}

Table read_csv_file(const std::filesystem::path &path) {
    std::string text = read_file(path);
    return read_csv(std::string_view(text));
}

RecordScan scan_records(std::string_view text, std::size_t max_records) {
    RecordScan scan;
    // The trailing partial record (no terminating newline) is not counted.
    std::size_t end = 0;
    bool in_quotes = false;
    for (std::size_t i = 0; i < text.size() && scan.records < max_records; ++i) {
        char ch = text[i];
        if (ch == '"') {
            in_quotes = !in_quotes;
        } else if (ch == '\n' && !in_quotes) {
            ++scan.records;
            end = i + 1;
        }
    }
    scan.end_offset = end;
    return scan;
}

std::string csv_escape(std::string_view cell) {
    bool needs_quotes = cell.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) {
        return std::string(cell);
    }
    std::string out = "\"";
    for (char ch : cell) {
        if (ch == '"') {
            out += "\"\"";
        } else {
            out.push_back(ch);
        }
    }
    out.push_back('"');
    return out;
}

void write_csv_row(std::ostream &out, const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out << ',';
        }
        out << csv_escape(cells[i]);
    }
    out << '\n';
}

void write_csv(std::ostream &out, const Table &table) {
    write_csv_row(out, table.header);
    for (const auto &row : table.rows) {
        write_csv_row(out, row);
    }
}

std::string to_csv_string(const Table &table) {
    std::ostringstream out;
    write_csv(out, table);
    return out.str();
}

void write_file_atomic(const std::filesystem::path &path, std::string_view contents) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                          ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
    }
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf, ptr);
}

std::string format_double(double value, int significant_digits) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general,
                                   significant_digits);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf, ptr);
}

} // namespace va
