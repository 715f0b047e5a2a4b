#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "colorrec/checkpoint.hpp"

namespace colorrec {

struct ServiceOptions {
  std::chrono::seconds session_ttl{3600};  // idle sessions are evicted after this
  std::string persist_dir;                 // empty keeps sessions in memory only
  std::uint64_t palette_seed = 0;
  std::size_t max_candidates = 64;
};

// HTTP facade over recommendation and recoloring. Each uploaded document
// is a session; requests on one session are serialized, different sessions
// run independently. The model is shared read-only.
class ColorService {
 public:
  ColorService(std::shared_ptr<const TrainedModel> model, ServiceOptions opts = {});
  ~ColorService();
  ColorService(const ColorService&) = delete;
  ColorService& operator=(const ColorService&) = delete;

  // Binds to host:port (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  bool running() const;

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace colorrec
