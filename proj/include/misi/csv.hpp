#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace misi::csv {

/// Numeric table with a header row, stored column-major.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Parses comma-separated numeric data with a header row. '.' is the
/// decimal separator; blank trailing lines are ignored. Throws IoError
/// with a line number on malformed input.
Table read(std::istream& in);
Table read_file(const std::string& path);

void write(std::ostream& out, const Table& table);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace misi::csv
