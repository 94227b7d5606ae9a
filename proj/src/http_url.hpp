#pragma once

#include <string>
#include <utility>

#include "sand/errors.hpp"

namespace sand::detail {

// Splits "http://host:port/some/path" into the client base
// ("http://host:port") and the path ("/some/path", "" when absent).
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos)
    raise(errc::config, "endpoint '" + url + "' is missing a scheme (expected http://...)");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace sand::detail
