#pragma once
// Request/response transport used by the external enrichment and escalation
// backends. Implementations post one JSON document and return the raw reply.

#include <string>

namespace drawmap {

struct TransportReply {
  bool ok = false;
  std::string body;   // raw response text when ok
  std::string error;  // transport failure description otherwise
  bool timed_out = false;
};

class JsonTransport {
 public:
  virtual ~JsonTransport() = default;
  virtual TransportReply post(const std::string& body) = 0;
};

}  // namespace drawmap
