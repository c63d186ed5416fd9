#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fuss::detail {

// RFC 4180 subset: quoted fields, doubled quotes, CRLF or LF.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file);

// Quotes a field when it contains a delimiter, quote, or newline.
std::string csv_escape(const std::string& field);

}  // namespace fuss::detail
