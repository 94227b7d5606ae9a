#pragma once

#include <string>

namespace sand::io {

// Whole-file reads and writes, binary mode. io error on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

// Creates the directory (and parents) if needed. io error on failure.
void ensure_dir(const std::string& path);

}  // namespace sand::io
