#pragma once

#include <string>
#include <vector>

namespace epicast {

// Minimal RFC-4180-ish CSV support: quoted fields, embedded commas and
// doubled quotes, CRLF tolerance. Good enough for the JHU wide layout
// (region names like "Korea, South" are quoted).

std::vector<std::string> split_csv_line(const std::string& line);

std::vector<std::vector<std::string>> read_csv(const std::string& path);

// Quotes a field only when it needs quoting.
std::string csv_escape(const std::string& field);

// Writes content to `path` via a temp file + rename, so partially written
// outputs are never observed.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace epicast
