#include "survaudit/csv.hpp"

#include <algorithm>
#include <sstream>

namespace survaudit {

std::size_t CsvTable::column_index(const std::string& name) const {
    auto idx = find_column(name);
    if (!idx) throw DataError("missing required column '" + name + "'");
    return *idx;
}

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line, const std::string& origin, std::size_t lineno) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError(origin + ":" + std::to_string(lineno) + ": unterminated quote");
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header && line[0] == '#') continue;
        auto cells = split_line(line, origin, lineno);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw DataError(origin + ": empty CSV (no header)");
    return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

namespace {
void append_cell(std::string& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
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
}  // namespace

std::string to_csv(const CsvTable& table, const std::string& comment) {
    std::string out;
    if (!comment.empty()) {
        out += "# ";
        out += comment;
        out += '\n';
    }
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out += ',';
        append_cell(out, table.header[c]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            append_cell(out, row[c]);
        }
        out += '\n';
    }
    return out;
}

bool is_missing_token(const std::string& token) {
    if (token.empty()) return true;
    static const char* kMissing[] = {"NA", "na", "NaN", "nan", "NAN", "null", "NULL"};
    for (const char* m : kMissing) {
        if (token == m) return true;
    }
    return false;
}

}  // namespace survaudit
