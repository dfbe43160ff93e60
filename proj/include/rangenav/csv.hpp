#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rangenav {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric CSV with a header row. Booleans "true"/"false" read as 1/0.
struct NumericTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Index of a column; throws CsvError if absent.
    std::size_t column(const std::string& name) const;
};

/// Errors name the source and 1-based line number.
NumericTable parse_numeric_csv(const std::string& text, const std::string& source = "<csv>");
NumericTable read_numeric_csv(const std::filesystem::path& path);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace rangenav
