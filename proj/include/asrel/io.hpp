#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asrel/core.hpp"

namespace asrel::io {

std::string_view trim(std::string_view text);

/// Splits on a single-character delimiter. Empty fields are kept.
std::vector<std::string_view> split(std::string_view text, char delim);

/// Parses an ASN token (surrounding whitespace allowed). Rejects 0 and values
/// above 2^32-1.
std::optional<Asn> parse_asn(std::string_view token);

std::optional<long long> parse_int(std::string_view token);
std::optional<double> parse_double(std::string_view token);

/// Invokes `fn(line_number, trimmed_line)` for every line that is neither blank
/// nor a `#` comment. Throws std::runtime_error naming the path if it cannot be
/// opened.
void for_each_data_line(const std::filesystem::path& path,
                        const std::function<void(std::size_t, std::string_view)>& fn);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

/// Reads one ASN per line (comments allowed).
std::vector<Asn> read_asn_list(const std::filesystem::path& path);

}  // namespace asrel::io
