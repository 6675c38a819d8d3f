#include "greennas/ingest/https_transport.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace greennas {

HttpResponse HttpsTransport::get(const std::string& host, const std::string& path_and_query) {
  httplib::SSLClient client(host);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto result = client.Get(path_and_query);
  HttpResponse response;
  if (!result) {
    response.status = 0;
    response.body = httplib::to_string(result.error());
    return response;
  }
  response.status = result->status;
  response.body = result->body;
  if (result->has_header("Retry-After")) {
    try {
      response.retry_after = std::chrono::seconds{std::stol(result->get_header_value("Retry-After"))};
    } catch (const std::exception&) {
    }
  }
  return response;
}

}  // namespace greennas
