#include "sand/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sand/errors.hpp"

namespace sand::io {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::io, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) raise(errc::io, "write to '" + path + "' failed");
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) raise(errc::io, "cannot create directory '" + path + "': " + ec.message());
}

}  // namespace sand::io
