#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mknock {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by header name, or -1.
    int column(const std::string& name) const;
};

/// Comma-separated with a header row; double-quoted fields may contain commas
/// and doubled quotes. Every row must have as many fields as the header.
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::string& path);

/// Numeric cell; std::nullopt for the missing token or an empty cell. Throws
/// DataError naming the row (1-based, header excluded) and column otherwise.
std::optional<double> parse_cell(const std::string& cell, const std::string& na, std::size_t row,
                                 const std::string& column);

std::string csv_escape(const std::string& field);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace mknock
