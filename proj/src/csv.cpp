#include "rangenav/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace rangenav {

std::size_t NumericTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw CsvError("missing column '" + name + "'");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

NumericTable parse_numeric_csv(const std::string& text, const std::string& source) {
    NumericTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.columns = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns.size())
            throw CsvError(fmt::format("{}: line {}: expected {} fields, found {}", source, line_no,
                                       table.columns.size(), fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string& f = fields[i];
            if (f == "true") { row.push_back(1.0); continue; }
            if (f == "false") { row.push_back(0.0); continue; }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
                throw CsvError(fmt::format("{}: line {}: column '{}' has non-numeric value '{}'", source,
                                           line_no, table.columns[i], f));
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw CsvError(source + ": missing header row");
    return table;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_numeric_csv(buf.str(), path.string());
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace rangenav
