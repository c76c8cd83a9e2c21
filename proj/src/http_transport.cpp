#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "trendscope/agents.hpp"
#include "trendscope/errors.hpp"

namespace trendscope::agents {

HttpTransport::HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttpTransport::post(const HttpRequest& request) {
  // scheme://host[:port]/path
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw ContractViolation("url without scheme: " + request.url);
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  client.set_read_timeout(timeout_);
  client.set_connection_timeout(std::chrono::seconds(30));
  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (k == "Content-Type") content_type = v;
    else headers.emplace(k, v);
  }
  auto res = client.Post(path, headers, request.body, content_type);
  if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

}  // namespace trendscope::agents
