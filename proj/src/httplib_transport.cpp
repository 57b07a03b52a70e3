#include <httplib.h>

#include "reassign/chat_client.hpp"

namespace reassign {

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("malformed URL '" + request.url + "'", false);
  auto path_start = request.url.find('/', scheme_end + 3);
  std::string origin = request.url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) throw TransportError("unsupported endpoint '" + origin + "'", false);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [name, value] : request.headers) {
    if (name == "Content-Type") {
      content_type = value;
    } else {
      headers.emplace(name, value);
    }
  }
  auto result = client.Post(path, headers, request.body, content_type);
  if (!result) {
    auto err = result.error();
    bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout;
    throw TransportError("HTTP request failed: " + httplib::to_string(err), timed_out);
  }
  return {result->status, result->body};
}

}  // namespace reassign
