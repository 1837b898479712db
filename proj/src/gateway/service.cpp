#include "presence/gateway/service.hpp"

#include <httplib.h>

#include "presence/geo.hpp"
#include "presence/presence_engine.hpp"
#include "presence/text_util.hpp"

namespace presence::gateway {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::precondition: return 422;
    case ErrorCode::corrupt:
    case ErrorCode::io: return 500;
  }
  return 500;
}

template <class F>
ApiResponse guarded(F&& handler) {
  try {
    return handler();
  } catch (const Error& e) {
    return {http_status(e.code()), json{{"error", e.what()}}};
  } catch (const json::exception& e) {
    return {400, json{{"error", std::string("bad request body: ") + e.what()}}};
  }
}

const std::string& required(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) {
    fail(ErrorCode::invalid_argument, "missing parameter '" + key + "'");
  }
  return it->second;
}

std::optional<std::string> optional_param(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

double number(const std::string& key, const std::string& text) {
  auto v = parse_double(trim(text));
  if (!v) fail(ErrorCode::invalid_argument, "parameter '" + key + "' must be a number");
  return *v;
}

template <class Int>
Int integer(const std::string& key, const std::string& text) {
  auto v = parse_int<Int>(trim(text));
  if (!v) fail(ErrorCode::invalid_argument, "parameter '" + key + "' must be an integer");
  return *v;
}

}  // namespace

PresenceKind parse_presence_kind(std::string_view text) {
  if (text == "simple") return PresenceKind::simple;
  if (text == "cumulative_single") return PresenceKind::cumulative_single;
  if (text == "cumulative_multi") return PresenceKind::cumulative_multi;
  fail(ErrorCode::invalid_argument,
       "kind must be simple, cumulative_single or cumulative_multi");
}

double query_presence(const PresenceState& state, const UserId& user, const LocationId& location,
                      const DecaySpec& decay, PresenceKind kind, Epoch now) {
  const VisitLog log = state.visits.materialized(now);
  const PresenceQuery q{user, location, decay, now};
  switch (kind) {
    case PresenceKind::simple: return presence(log, *state.registry, q);
    case PresenceKind::cumulative_single:
      return cumulative_presence_single(log, *state.registry, q, state.graph.location_edges());
    case PresenceKind::cumulative_multi:
      return cumulative_presence_multi(log, *state.registry, q, state.graph.location_edges());
  }
  return 0.0;
}

PresenceGraph refreshed_graph(const PresenceState& state, const DecaySpec& decay, Epoch now,
                              double prune_epsilon) {
  return refresh_presence_edges(state.graph, state.visits.materialized(now), *state.registry,
                                decay, now, prune_epsilon);
}

PresenceService::PresenceService(ServiceConfig config, PresenceState state, Clock clock)
    : config_(std::move(config)),
      default_decay_(config_.decay_spec()),
      clock_(std::move(clock)),
      state_(std::make_shared<const PresenceState>(std::move(state))) {}

std::shared_ptr<const PresenceState> PresenceService::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

void PresenceService::publish(std::shared_ptr<const PresenceState> next) {
  std::lock_guard lock(state_mutex_);
  state_ = std::move(next);
}

Epoch PresenceService::now_from(const Params& params) const {
  if (auto t = optional_param(params, "now")) return integer<Epoch>("now", *t);
  return clock_();
}

ApiResponse PresenceService::nearest(const Params& params) const {
  return guarded([&] {
    const auto point = GeoPoint::make(number("lat", required(params, "lat")),
                                      number("lon", required(params, "lon")));
    const auto radius_text = optional_param(params, "radius");
    const double radius = radius_text ? number("radius", *radius_text) : config_.visit.r_v;
    const auto snapshot = state();
    const auto hit = nearest_location(*snapshot->registry, point, radius);
    if (!hit) return ApiResponse{404, json{{"error", "no location within radius"}}};
    return ApiResponse{200, json{{"location_id", hit->location.str()}, {"distance_m", hit->meters}}};
  });
}

ApiResponse PresenceService::post_visit(const std::string& json_body) {
  return guarded([&] {
    const json doc = json::parse(json_body);
    const UserId user(doc.at("user").get<std::string>());
    const LocationId location(doc.at("location_id").get<std::string>());
    const Epoch start = doc.at("start").get<Epoch>();
    const bool closed = doc.contains("end") && !doc["end"].is_null();
    const Epoch now = clock_();

    std::lock_guard writer(writer_mutex_);
    auto next = std::make_shared<PresenceState>(*state());
    json reply{{"user", user.str()}, {"location_id", location.str()}, {"start", start}};
    if (closed) {
      const Epoch end = doc["end"].get<Epoch>();
      add_visit(next->visits, *next->registry, user, location, VisitInterval{start, end}, now);
      next->visits.close_open(user, location, start);
      reply["end"] = end;
      reply["state"] = "closed";
    } else {
      next->registry->require(location);
      if (start > now) fail(ErrorCode::invalid_argument, "visit cannot start in the future");
      next->visits.open(user, location, start);
      reply["state"] = "open";
    }
    next->graph.add_user(user);
    publish(std::move(next));
    return ApiResponse{201, reply};
  });
}

ApiResponse PresenceService::presence(const Params& params) const {
  return guarded([&] {
    const UserId user(required(params, "user"));
    const LocationId location(required(params, "location"));
    const auto decay_text = optional_param(params, "decay");
    const DecaySpec decay = decay_text ? DecaySpec::parse(*decay_text) : default_decay_;
    const auto kind_text = optional_param(params, "kind");
    const PresenceKind kind = kind_text ? parse_presence_kind(*kind_text) : PresenceKind::simple;
    const Epoch now = now_from(params);
    const double value = query_presence(*state(), user, location, decay, kind, now);
    return ApiResponse{200, json{{"user", user.str()},
                                 {"location", location.str()},
                                 {"kind", kind_text.value_or("simple")},
                                 {"decay", decay.to_string()},
                                 {"now", now},
                                 {"value", value}}};
  });
}

ApiResponse PresenceService::awareness(const Params& params) const {
  return guarded([&] {
    const UserId user(required(params, "user"));
    const LocationId location(required(params, "location"));
    AwarenessParams ap = config_.awareness;
    if (auto v = optional_param(params, "top_k")) ap.top_k = integer<std::size_t>("top_k", *v);
    if (auto v = optional_param(params, "theta")) ap.theta = number("theta", *v);
    ap.validate();
    const auto decay_text = optional_param(params, "decay");
    const DecaySpec decay = decay_text ? DecaySpec::parse(*decay_text) : default_decay_;
    const Epoch now = now_from(params);
    const auto mode = optional_param(params, "mode").value_or("extended");
    if (mode != "extended" && mode != "colocated") {
      fail(ErrorCode::invalid_argument, "mode must be extended or colocated");
    }

    const auto snapshot = state();
    std::shared_ptr<const PresenceGraph> graph;
    {
      std::lock_guard lock(cache_mutex_);
      if (cache_.graph && cache_.source == snapshot && cache_.now == now &&
          cache_.decay == decay.to_string()) {
        graph = cache_.graph;
      }
    }
    if (!graph) {
      graph = std::make_shared<const PresenceGraph>(
          refreshed_graph(*snapshot, decay, now, ap.prune_epsilon));
      std::lock_guard lock(cache_mutex_);
      cache_ = {snapshot, decay.to_string(), now, graph};
    }

    auto ranked = mode == "colocated" ? co_located_ranked(*graph, location, user)
                                      : extended_awareness(*graph, location, user, ap);
    if (ranked.size() > ap.top_k) ranked.erase(ranked.begin() + ap.top_k, ranked.end());
    json results = json::array();
    for (const auto& e : ranked) {
      results.push_back({{"user", e.user.str()},
                         {"score", e.score},
                         {"via", e.via.str()},
                         {"closeness", e.closeness},
                         {"presence", e.presence}});
    }
    return ApiResponse{200, json{{"user", user.str()},
                                 {"location", location.str()},
                                 {"mode", mode},
                                 {"now", now},
                                 {"results", results}}};
  });
}

ApiResponse PresenceService::rooms(const Params& params) const {
  return guarded([&] {
    const LocationId location(required(params, "location"));
    const RoomKind kind = parse_room_kind(required(params, "kind"));
    const auto room = room_for(*state()->registry, location, kind);
    return ApiResponse{200, json{{"location", location.str()}, {"room", room}}};
  });
}

std::string PresenceService::snapshot_at(Epoch now) {
  std::lock_guard writer(writer_mutex_);
  auto next = std::make_shared<PresenceState>(*state());
  next->graph = refreshed_graph(*next, default_decay_, now, config_.awareness.prune_epsilon);
  next->refreshed_at = now;
  auto archive = snapshot(*next);
  publish(std::move(next));
  return archive;
}

void PresenceService::mount(httplib::Server& server) {
  auto params_of = [](const httplib::Request& req) {
    Params out;
    for (const auto& [k, v] : req.params) out.emplace(k, v);
    return out;
  };
  auto send = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.text(), "application/json");
  };
  server.Get("/locations/nearest", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, nearest(params_of(req)));
  });
  server.Post("/visits", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, post_visit(req.body));
  });
  server.Get("/presence", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, presence(params_of(req)));
  });
  server.Get("/awareness", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, awareness(params_of(req)));
  });
  server.Get("/rooms", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, rooms(params_of(req)));
  });
}

void serve(PresenceService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) {
    fail(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace presence::gateway
