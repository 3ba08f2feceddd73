#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace toxigan {

struct HttpEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string api_key;
  double timeout_s = 30.0;
  int retries = 3;  // extra attempts after the first failure
};

/// POSTs a JSON body and parses the JSON reply. Connection failures and
/// non-2xx statuses are retried up to `retries` times; after that a
/// TransportError is thrown.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

}  // namespace toxigan
