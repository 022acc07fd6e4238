#pragma once

#include <string>
#include <vector>

namespace pact {

// Formats a double with "%.10g" so repeated runs produce byte-identical files.
std::string format_double(double v);

// Writes content to path atomically (temp file in the same directory, then
// rename). Creates parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

// Reads a whole file into a string. Throws RuntimeError if unreadable.
std::string read_file(const std::string& path);

// Splits one CSV line on commas. No quoting support; none of the formats
// produced or consumed here embed commas in fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Splits text into lines, tolerating trailing newline and CRLF endings.
std::vector<std::string> split_lines(const std::string& text);

}  // namespace pact
