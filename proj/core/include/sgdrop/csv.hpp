#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sgdrop::csv {

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Splits on ',' or '\t' (whichever the line uses), trimming whitespace and
/// surrounding double quotes.
std::vector<std::string> split_line(std::string_view line);

/// Reads a whole text file into lines, dropping a trailing '\r' and blank lines.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes text to a file, creating parent directories. Throws std::runtime_error.
void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace sgdrop::csv
