#pragma once

// Internal HTTP plumbing shared by the encoder, judge and NLI clients.
// Not installed.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "httplib.h"
#include "sguq/error.hpp"

namespace sguq::detail {

struct ParsedUrl {
  std::string host_port;  // scheme://host[:port], as httplib::Client wants it
  std::string path;       // leading slash, "/" when absent
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ArgumentError("endpoint URL missing scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string bearer_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* v = std::getenv(env_name.c_str());
  return v ? std::string(v) : std::string();
}

// POST a JSON body; retries transport failures with exponential backoff
// (base 50 ms), then throws IoError tagged with `context`. Non-2xx status
// counts as a transport failure.
inline std::string post_json(const std::string& url, const std::string& body,
                             const std::string& auth_token_env,
                             std::chrono::milliseconds timeout, int max_retries,
                             const std::string& context) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.host_port);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout) +
                                std::chrono::seconds(1));
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const std::string token = bearer_from_env(auth_token_env);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  std::string last_failure;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50) * (1 << (attempt - 1)));
    }
    auto res = client.Post(parsed.path, headers, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) return res->body;
    last_failure = res ? "status " + std::to_string(res->status)
                       : "transport error " + httplib::to_string(res.error());
  }
  throw IoError(context + ": " + url + ": " + last_failure + " after " +
                std::to_string(max_retries + 1) + " attempts");
}

}  // namespace sguq::detail
