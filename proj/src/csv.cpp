#include "misi/csv.hpp"

#include "misi/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace misi::csv {
namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

Table read(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            if (line_no == 1 && fields.front().rfind("\xEF\xBB\xBF", 0) == 0)
                fields.front().erase(0, 3);
            for (const auto& f : fields)
                if (f.empty()) throw IoError("empty column name in CSV header");
            table.header = std::move(fields);
            table.columns.resize(table.header.size());
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw IoError("CSV line " + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(table.header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto& f = fields[j];
            double v = 0.0;
            const auto* begin = f.data();
            const auto* end = f.data() + f.size();
            if (!f.empty() && *begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, v);
            if (f.empty() || ec != std::errc() || ptr != end)
                throw IoError("CSV line " + std::to_string(line_no) + ", column '" +
                              table.header[j] + "': cannot parse '" + f + "' as a number");
            table.columns[j].push_back(v);
        }
    }
    if (!have_header) throw IoError("CSV input has no header row");
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read(in);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void write(std::ostream& out, const Table& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j) out << ',';
        out << table.header[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            if (j) out << ',';
            out << format_double(table.columns[j][i]);
        }
        out << '\n';
    }
}

}  // namespace misi::csv
