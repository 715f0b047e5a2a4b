#include "colorrec/service.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>

#include "colorrec/error.hpp"
#include "colorrec/image.hpp"
#include "colorrec/recolor.hpp"
#include "colorrec/recommend.hpp"
#include "httplib.h"
#include "json.hpp"

namespace colorrec {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Favorite {
  std::string label;
  std::string document;  // serialized snapshot
  MultiPalette palettes;
};

struct Session {
  std::mutex mutex;
  GraphicDocument doc;
  MultiPalette palettes;
  std::vector<Favorite> favorites;
  Clock::time_point last_access = Clock::now();
};

int status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::wrong_kind:
      return 409;
    case ErrorCode::invalid_slot:
    case ErrorCode::unknown_code:
      return 422;
    default:
      return 400;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& path = {}) {
  json err{{"code", code}, {"message", message}};
  if (!path.empty()) err["path"] = path;
  res.status = status;
  res.set_content(json{{"error", err}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body) {
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

json palettes_json(const MultiPalette& mp) {
  json out = json::object();
  for (Group g : kGroups) {
    json arr = json::array();
    const Palette& p = mp[g];
    for (std::size_t i = 0; i < p.size(); ++i) {
      arr.push_back({{"slot", i},
                     {"hex", to_hex(lab_to_srgb(p.colors[i]))},
                     {"code", to_string(quantize(p.colors[i]))},
                     {"weight", p.weights[i]}});
    }
    out[std::string(to_string(g))] = arr;
  }
  return out;
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::parse, "request body is not a JSON object", "/");
  }
  return body;
}

SlotRef slot_from(const json& v, const std::string& path) {
  if (!v.is_string()) throw Error(ErrorCode::parse, "slot must be a string like \"svg:0\"", path);
  auto slot = parse_slot(v.get<std::string>());
  if (!slot) throw Error(ErrorCode::invalid_slot, "bad slot '" + v.get<std::string>() + "'", path);
  return *slot;
}

// Accepts "li_ai_bi" codes and "#rrggbb" colors.
ColorCode code_from(const json& v, const std::string& path) {
  if (!v.is_string()) throw Error(ErrorCode::unknown_code, "code must be a string", path);
  const std::string s = v.get<std::string>();
  if (!s.empty() && s[0] == '#') {
    if (auto rgb = parse_hex(s)) return quantize(*rgb);
    throw Error(ErrorCode::unknown_code, "bad color '" + s + "'", path);
  }
  if (auto code = parse_code(s); code && VocabConfig{}.contains(*code)) return *code;
  throw Error(ErrorCode::unknown_code, "bad code '" + s + "'", path);
}

}  // namespace

struct ColorService::Impl {
  std::shared_ptr<const TrainedModel> model;
  ServiceOptions opts;
  httplib::Server server;

  mutable std::shared_mutex store_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_id = 1;

  Impl(std::shared_ptr<const TrainedModel> m, ServiceOptions o) : model(std::move(m)), opts(std::move(o)) {
    if (!model) throw Error(ErrorCode::invalid_argument, "service needs a model");
    load_persisted();
    routes();
  }

  MultiPalette extract(const GraphicDocument& doc) const {
    return extract_multi_palette(doc, opts.palette_seed);
  }

  void evict_idle() {
    const auto now = Clock::now();
    std::unique_lock lock(store_mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
      if (session_lock.owns_lock() && now - it->second->last_access > opts.session_ttl) {
        session_lock.unlock();
        if (!opts.persist_dir.empty()) std::filesystem::remove(persist_path(it->first));
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::shared_ptr<Session> find(const std::string& id) {
    evict_idle();
    std::shared_lock lock(store_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::not_found, "no document '" + id + "'");
    return it->second;
  }

  std::string persist_path(const std::string& id) const {
    return (std::filesystem::path(opts.persist_dir) / (id + ".json")).string();
  }

  void persist(const std::string& id, const Session& s) const {
    if (opts.persist_dir.empty()) return;
    json favs = json::array();
    for (const auto& f : s.favorites) favs.push_back({{"label", f.label}, {"document", f.document}});
    json j{{"document", serialize_document(s.doc)}, {"favorites", favs}};
    std::ofstream(persist_path(id)) << j.dump();
  }

  void load_persisted() {
    if (opts.persist_dir.empty()) return;
    std::filesystem::create_directories(opts.persist_dir);
    for (const auto& entry : std::filesystem::directory_iterator(opts.persist_dir)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded()) continue;
      auto s = std::make_shared<Session>();
      try {
        s->doc = parse_document(j.at("document").get<std::string>());
        s->palettes = extract(s->doc);
        for (const auto& f : j.value("favorites", json::array())) {
          const auto doc_text = f.at("document").get<std::string>();
          s->favorites.push_back({f.value("label", ""), doc_text, extract(parse_document(doc_text))});
        }
      } catch (const std::exception&) {
        continue;
      }
      const std::string id = entry.path().stem().string();
      if (id.rfind("doc-", 0) == 0) {
        try {
          next_id = std::max<std::uint64_t>(next_id, std::stoull(id.substr(4)) + 1);
        } catch (const std::exception&) {
        }
      }
      sessions[id] = std::move(s);
    }
  }

  // Runs a handler and maps library errors to structured responses.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, status_of(e.code()), to_string(e.code()), e.what(), e.path());
      } catch (const json::exception& e) {
        send_error(res, 400, "parse", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"status", "ok"}, {"vocab_size", model->vocab().num_colors()}});
    }));

    server.Post("/documents", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = std::make_shared<Session>();
      s->doc = parse_document(req.body);
      s->palettes = extract(s->doc);
      std::string id;
      {
        std::unique_lock lock(store_mutex);
        id = "doc-" + std::to_string(next_id++);
        sessions[id] = s;
      }
      persist(id, *s);
      send_json(res, {{"id", id}, {"palettes", palettes_json(s->palettes)}});
    }));

    server.Get(R"(/documents/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto s = find(id);
      std::lock_guard lock(s->mutex);
      s->last_access = Clock::now();
      send_json(res, {{"id", id},
                      {"document", json::parse(serialize_document(s->doc))},
                      {"palettes", palettes_json(s->palettes)}});
    }));

    server.Put(R"(/documents/([^/]+)/elements/([^/]+)/image)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const std::string eid = req.matches[2];
                 auto s = find(id);
                 std::lock_guard lock(s->mutex);
                 s->last_access = Clock::now();
                 const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
                 RasterImage image = decode_png({bytes, req.body.size()});
                 GraphicDocument updated = replace_image_element(s->doc, eid, std::move(image));
                 s->palettes = extract(updated);
                 s->doc = std::move(updated);
                 persist(id, *s);
                 send_json(res, {{"id", id}, {"palettes", palettes_json(s->palettes)}});
               }));

    server.Post(R"(/documents/([^/]+)/recommend)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto s = find(id);
                  const json body = parse_body(req);
                  std::vector<SlotRef> slots;
                  const json& slot_list = body.at("slots");
                  if (!slot_list.is_array()) throw Error(ErrorCode::parse, "slots must be an array", "/slots");
                  for (std::size_t i = 0; i < slot_list.size(); ++i) {
                    slots.push_back(slot_from(slot_list[i], "/slots/" + std::to_string(i)));
                  }
                  const json& n_value = body.value("n", json(3));
                  if (!n_value.is_number_integer() || n_value.get<long>() < 1) {
                    throw Error(ErrorCode::parse, "n must be a positive integer", "/n");
                  }
                  const auto n = std::min<std::size_t>(n_value.get<std::size_t>(), opts.max_candidates);
                  std::set<ColorCode> exclude;
                  if (body.contains("exclude")) {
                    const json& ex = body["exclude"];
                    if (!ex.is_array()) throw Error(ErrorCode::parse, "exclude must be an array", "/exclude");
                    for (std::size_t i = 0; i < ex.size(); ++i) {
                      exclude.insert(code_from(ex[i], "/exclude/" + std::to_string(i)));
                    }
                  }
                  RecommendOptions ropts;
                  ropts.palette_seed = opts.palette_seed;
                  ropts.iterative = body.value("iterative", false);

                  std::lock_guard lock(s->mutex);
                  s->last_access = Clock::now();
                  const auto recs = recommend_for_palettes(s->palettes, slots, n, *model, ropts, exclude);
                  json out = json::array();
                  for (const auto& r : recs) {
                    json cands = json::array();
                    for (const auto& c : r.candidates) {
                      cands.push_back({{"code", to_string(c.code)},
                                       {"hex", to_hex(c.display)},
                                       {"probability", c.probability},
                                       {"rank", c.rank}});
                    }
                    out.push_back({{"slot", to_string(r.slot)},
                                   {"source", to_hex(lab_to_srgb(r.source))},
                                   {"candidates", cands}});
                  }
                  send_json(res, {{"id", id}, {"recommendations", out}});
                }));

    server.Post(R"(/documents/([^/]+)/recolor)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto s = find(id);
                  const json body = parse_body(req);
                  const SlotRef slot = slot_from(body.at("slot"), "/slot");
                  const ColorCode code = code_from(body.at("code"), "/code");

                  std::lock_guard lock(s->mutex);
                  s->last_access = Clock::now();
                  check_slots(s->palettes, std::span<const SlotRef>(&slot, 1));
                  const LabColor source = s->palettes[slot.group].colors[static_cast<std::size_t>(slot.slot)];
                  // The slot's own code keeps its exact color; any other code
                  // must be one the model can recommend.
                  LabColor target = source;
                  if (quantize(source) != code) {
                    if (!model->vocab().contains(code)) {
                      throw Error(ErrorCode::unknown_code, "code " + to_string(code) + " is not in the vocabulary",
                                  "/code");
                    }
                    target = target_lab(code);
                  }
                  GraphicDocument updated = apply_color(s->doc, s->palettes, slot, target);
                  s->palettes = extract(updated);
                  s->doc = std::move(updated);
                  persist(id, *s);
                  const auto png = encode_png(render_preview(s->doc));
                  send_json(res, {{"id", id},
                                  {"preview", base64_encode(png)},
                                  {"document", json::parse(serialize_document(s->doc))},
                                  {"palettes", palettes_json(s->palettes)}});
                }));

    const auto favorites_json = [](const Session& s) {
      json arr = json::array();
      for (std::size_t i = 0; i < s.favorites.size(); ++i) {
        arr.push_back({{"index", i},
                       {"label", s.favorites[i].label},
                       {"palettes", palettes_json(s.favorites[i].palettes)}});
      }
      return arr;
    };

    server.Post(R"(/documents/([^/]+)/favorites)",
                guarded([this, favorites_json](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto s = find(id);
                  json body = req.body.empty() ? json::object() : parse_body(req);
                  const std::string label = body.value("snapshot", std::string{});
                  std::lock_guard lock(s->mutex);
                  s->last_access = Clock::now();
                  const std::string doc_text = serialize_document(s->doc);
                  bool added = true;
                  for (const auto& f : s->favorites) {
                    if (f.label == label && f.document == doc_text) {
                      added = false;
                      break;
                    }
                  }
                  if (added) {
                    s->favorites.push_back({label, doc_text, s->palettes});
                    persist(id, *s);
                  }
                  send_json(res, {{"id", id}, {"added", added}, {"favorites", favorites_json(*s)}});
                }));

    server.Get(R"(/documents/([^/]+)/favorites)",
               guarded([this, favorites_json](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 auto s = find(id);
                 std::lock_guard lock(s->mutex);
                 s->last_access = Clock::now();
                 send_json(res, {{"id", id}, {"favorites", favorites_json(*s)}});
               }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "not_found" : "http", "no such endpoint");
      }
    });
  }
};

ColorService::ColorService(std::shared_ptr<const TrainedModel> model, ServiceOptions opts)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(opts))) {}

ColorService::~ColorService() { stop(); }

int ColorService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::invalid_argument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ColorService::listen() { impl_->server.listen_after_bind(); }
void ColorService::stop() { impl_->server.stop(); }
bool ColorService::running() const { return impl_->server.is_running(); }

std::size_t ColorService::session_count() const {
  std::shared_lock lock(impl_->store_mutex);
  return impl_->sessions.size();
}

}  // namespace colorrec
