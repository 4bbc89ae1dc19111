#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace reloss {

/// Shortest round-trippable text for CSV cells (%.9g). Non-finite values are
/// rejected so no emitted file ever contains NaN.
std::string csv_number(double v);

/// Accumulates rows in memory and writes the file in one go.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void add(std::vector<std::string> fields);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Comma-separated rows, header included. No quoting support.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace reloss
