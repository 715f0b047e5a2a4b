#pragma once

#include <thread>

#include "colorrec/service.hpp"
#include "contract.hpp"
#include "shared_model.hpp"

namespace fixture {

// Runs a ColorService on a free local port for the fixture's lifetime.
class RunningService {
 public:
  explicit RunningService(std::shared_ptr<const colorrec::TrainedModel> model, colorrec::ServiceOptions opts = {})
      : service_(std::move(model), std::move(opts)) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.listen(); });
    while (!service_.running()) std::this_thread::yield();
  }
  ~RunningService() {
    service_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  colorrec::ColorService& service() { return service_; }

 private:
  colorrec::ColorService service_;
  int port_ = 0;
  std::thread thread_;
};

inline contract::Inputs contract_inputs(const SmallWorld& world, int port) {
  contract::Inputs in;
  in.port = port;
  const colorrec::GraphicDocument& doc = world.corpus.test_documents[0];
  in.document = colorrec::serialize_document(doc);
  for (const auto& e : doc.elements) {
    if (colorrec::is_image_like(e.kind) && in.image_element.empty()) in.image_element = e.id;
    if (!colorrec::is_image_like(e.kind) && in.svg_element.empty()) in.svg_element = e.id;
  }
  for (std::uint16_t l = 0; l < 16 && in.absent_code.empty(); ++l) {
    const colorrec::ColorCode c{l, 0, 0};
    if (!world.vocab.contains(c)) in.absent_code = colorrec::to_string(c);
  }
  return in;
}

}  // namespace fixture
