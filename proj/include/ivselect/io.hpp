#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ivselect/dataset.hpp"

namespace ivselect::io {

struct CsvColumns {
    std::string outcome;
    std::string treatment;
    /// Empty means every other column.
    std::vector<std::string> candidates;
};

/// Reads a comma-separated file with a header row. Errors name the file
/// line and column of the offending cell.
Dataset read_csv(const std::filesystem::path& path, const CsvColumns& columns);
Dataset parse_csv(const std::string& text, const CsvColumns& columns, const std::string& source = "<input>");

/// Writes outcome, treatment and candidates with a header row.
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Writes `content` to a temporary file beside `path`, then renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ivselect::io
