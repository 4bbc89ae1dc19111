#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>

namespace reloss {

/// Flat `key = value` settings. Blank lines and lines starting with '#' are
/// ignored; later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_config(const std::filesystem::path& path);

}  // namespace reloss
