#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lcm {

using Json = nlohmann::json;

Json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const Json& doc);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// FNV-1a 64; used for config hashes in checkpoints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Shortest round-trip decimal form of a double (locale independent).
std::string format_double(double value);

// Minimal CSV table: header + rows of pre-formatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string to_string() const;
    void save(const std::filesystem::path& path) const;

    static CsvTable parse(std::string_view text);
    static CsvTable load(const std::filesystem::path& path);

    // Index of a header column; throws ConfigError when absent.
    std::size_t column(std::string_view name) const;
};

// Parameter lookup helpers with path-aware error messages.
double require_number(const Json& obj, std::string_view key, std::string_view context);
std::vector<double> require_number_array(const Json& obj, std::string_view key,
                                         std::string_view context);

}  // namespace lcm
