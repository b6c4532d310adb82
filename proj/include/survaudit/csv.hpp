#pragma once

#include <optional>
#include <string>
#include <vector>

#include "survaudit/common.hpp"

namespace survaudit {

/// In-memory CSV table: one header row plus string cells.
/// Lines starting with '#' before the header are treated as comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;         // throws DataError
    std::optional<std::size_t> find_column(const std::string& name) const;
    const std::string& cell(std::size_t row, std::size_t col) const { return rows[row][col]; }
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

/// Serializes with minimal quoting. comment, when set, is emitted first as
/// "# <comment>" (the config-hash line every artifact carries).
std::string to_csv(const CsvTable& table, const std::string& comment = "");

/// Missing-value convention shared by every input schema.
bool is_missing_token(const std::string& token);

}  // namespace survaudit
