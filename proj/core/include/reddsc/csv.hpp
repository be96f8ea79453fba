#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "reddsc/errors.hpp"

namespace reddsc {

/// Minimal comma-separated table with a required header row.
struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws MissingColumn.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

double parse_double(const std::string& field, const std::string& context);
int parse_int(const std::string& field, const std::string& context);

std::string join_csv_row(const std::vector<std::string>& fields);

}  // namespace reddsc
