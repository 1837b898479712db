#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "presence/core_model.hpp"
#include "presence/gateway/config.hpp"
#include "presence/presence_graph.hpp"
#include "presence/similarity.hpp"

namespace presence::gateway {

enum class RoomKind { web, geo };

RoomKind parse_room_kind(std::string_view text);

/// Group-chat room for a location's virtual (`web-<id>`) or physical
/// (`geo-<id>`) representation. Geo rooms need a geo binding.
std::string room_for(const LocationRegistry& registry, const LocationId& location, RoomKind kind);

struct LocationLoad {
  LocationRegistry registry;
  std::size_t loaded = 0;
  std::size_t rejected = 0;
  std::vector<std::string> warnings;
};

/// Reads the locations CSV (`location_id,name,lat,lon,url`, header row).
/// The url field may list several URLs separated by whitespace. Rows without
/// lat/lon become virtual-only locations. In strict mode any bad row,
/// duplicate id or shared coordinate throws; otherwise the row is skipped
/// (first occurrence wins) and a warning recorded.
LocationLoad load_locations(std::istream& in, bool strict);
LocationLoad load_locations(const std::filesystem::path& path, bool strict);

/// Lines `user_a<TAB>user_b<TAB>weight`.
void read_user_edges(std::istream& in, PresenceGraph& graph);

/// Everything a running service holds: registry, visits, and the presence
/// graph from the most recent refresh.
struct PresenceState {
  std::shared_ptr<const LocationRegistry> registry = std::make_shared<LocationRegistry>();
  VisitLog visits;
  PresenceGraph graph;
  Epoch refreshed_at = 0;

  /// Adds every registered location as a graph vertex.
  void sync_vertices();
};

/// Closeness provider configured by the measure list of `config`, over the
/// state's registry. Existing explicit/cached entries are preserved.
void attach_measures(PresenceState& state, const ServiceConfig& config);

/// Builds state from the data files named in the config.
PresenceState load_state(const ServiceConfig& config, Epoch now);

inline constexpr int kSnapshotVersion = 1;

/// Checksummed archive of the full state. Text header, then a JSON body:
///   PRESENCE-SNAPSHOT <version>\n<body-bytes> <crc32-hex>\n<body>
std::string snapshot(const PresenceState& state);
PresenceState restore(const std::string& archive);

void write_snapshot(const std::filesystem::path& path, const PresenceState& state);
PresenceState read_snapshot(const std::filesystem::path& path);

bool same_state(const PresenceState& a, const PresenceState& b);

}  // namespace presence::gateway
