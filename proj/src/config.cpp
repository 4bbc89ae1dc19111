#include "reloss/config.hpp"

#include <fstream>

#include "reloss/error.hpp"

namespace reloss {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config line " + std::to_string(number) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw FormatError("config line " + std::to_string(number) + ": empty key");
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

KeyValues read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_key_values(in);
}

}  // namespace reloss
