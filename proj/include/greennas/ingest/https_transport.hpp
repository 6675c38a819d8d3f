#pragma once

#include <chrono>

#include "greennas/ingest/open_meteo.hpp"

namespace greennas {

// TLS transport over cpp-httplib. Lives in the compiled greennas_https
// library, which links OpenSSL.
class HttpsTransport final : public HttpTransport {
 public:
  explicit HttpsTransport(std::chrono::seconds timeout = std::chrono::seconds{60}) : timeout_(timeout) {}

  HttpResponse get(const std::string& host, const std::string& path_and_query) override;

 private:
  std::chrono::seconds timeout_;
};

}  // namespace greennas
