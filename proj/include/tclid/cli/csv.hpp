// Locale-independent numeric CSV output and input.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tclid::cli {

/// Shortest-round-trip-safe scientific notation ("%.16e"-style via
/// std::to_chars); "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct NumericCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a CSV whose cells are all numeric. Throws std::runtime_error with
/// the line number on malformed input.
NumericCsv read_numeric_csv(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace tclid::cli
