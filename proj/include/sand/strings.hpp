#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sand::strings {

std::string trim(std::string_view s);

// Collapses every internal run of whitespace (space, tab, newline, CR) to a
// single space. Does not trim; combine with trim() for full normalization.
std::string collapse_ws(std::string_view s);

std::string to_lower(std::string_view s);

// Splits on '\n'; a trailing newline does not produce an empty final element.
std::vector<std::string> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string_view text, std::string_view from,
                        std::string_view to);

bool contains_ci(std::string_view haystack, std::string_view needle);

bool starts_with(std::string_view s, std::string_view prefix);

// FNV-1a over raw bytes, 64 bit. Output is fully specified, so checksums and
// string-derived seeds replay identically on every platform.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Locale-free fixed-decimal formatting (snprintf backend).
std::string format_double(double v, int decimals);

}  // namespace sand::strings
