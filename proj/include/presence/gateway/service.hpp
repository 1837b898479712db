#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "presence/gateway/config.hpp"
#include "presence/gateway/state.hpp"

namespace httplib {
class Server;
}

namespace presence::gateway {

using Params = std::map<std::string, std::string>;

struct ApiResponse {
  int status = 200;
  nlohmann::json body;

  std::string text() const { return body.dump(); }
};

enum class PresenceKind { simple, cumulative_single, cumulative_multi };

PresenceKind parse_presence_kind(std::string_view text);

/// Library-level answers to the REST queries. Handlers only translate
/// parameters; the same functions back the HTTP routes and the CLI.
double query_presence(const PresenceState& state, const UserId& user, const LocationId& location,
                      const DecaySpec& decay, PresenceKind kind, Epoch now);

PresenceGraph refreshed_graph(const PresenceState& state, const DecaySpec& decay, Epoch now,
                              double prune_epsilon);

/// Serves lookups, visit reports, presence, awareness and room assignments
/// over one state snapshot at a time. Reads share an immutable snapshot;
/// writes copy, mutate and publish a new one under a single writer lock.
class PresenceService {
 public:
  using Clock = std::function<Epoch()>;

  PresenceService(ServiceConfig config, PresenceState state, Clock clock = wall_clock_now);

  ApiResponse nearest(const Params& params) const;
  ApiResponse post_visit(const std::string& json_body);
  ApiResponse presence(const Params& params) const;
  ApiResponse awareness(const Params& params) const;
  ApiResponse rooms(const Params& params) const;

  std::shared_ptr<const PresenceState> state() const;
  /// Refreshes presence edges at `now` and returns the archive text.
  std::string snapshot_at(Epoch now);

  void mount(httplib::Server& server);

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  void publish(std::shared_ptr<const PresenceState> next);
  Epoch now_from(const Params& params) const;

  ServiceConfig config_;
  DecaySpec default_decay_;
  Clock clock_;

  mutable std::mutex state_mutex_;
  std::shared_ptr<const PresenceState> state_;
  std::mutex writer_mutex_;

  struct GraphCache {
    std::shared_ptr<const PresenceState> source;
    std::string decay;
    Epoch now = 0;
    std::shared_ptr<const PresenceGraph> graph;
  };
  mutable std::mutex cache_mutex_;
  mutable GraphCache cache_;
};

/// Blocking HTTP server on the configured host/port.
void serve(PresenceService& service, const std::string& host, int port);

}  // namespace presence::gateway
