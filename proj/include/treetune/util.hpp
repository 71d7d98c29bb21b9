#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace treetune {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// floor(x + 0.5): the rounding used for every "fraction of a count".
std::int64_t round_half_up(double x);

/// 64-bit FNV-1a over raw bytes, used for dataset fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Writes the file atomically enough for our purposes (truncate + write);
/// throws DataError if the path cannot be opened.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace treetune
