#include "presence/gateway/state.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "presence/text_util.hpp"

namespace presence::gateway {

namespace {

using nlohmann::json;

// One RFC 4180 record from a single line; quoted fields may contain commas
// and doubled quotes, but not line breaks.
std::optional<std::vector<std::string>> csv_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(was_quoted ? field : std::string(trim(field)));
  return out;
}

std::vector<VirtualCoordinate> parse_urls(const std::string& field) {
  std::vector<VirtualCoordinate> out;
  std::istringstream words(field);
  std::string url;
  while (words >> url) out.emplace_back(url);
  return out;
}

std::uint32_t crc_of(std::string_view body) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
}

json registry_json(const LocationRegistry& registry) {
  json out = json::array();
  for (const auto& [id, loc] : registry.locations()) {
    json coords = json::array();
    for (const auto& c : loc.coordinates) coords.push_back(c.str());
    json point = loc.point ? json::array({loc.point->lat, loc.point->lon}) : json(nullptr);
    out.push_back({{"id", id.str()}, {"name", loc.name}, {"coordinates", coords}, {"point", point}});
  }
  return out;
}

}  // namespace

RoomKind parse_room_kind(std::string_view text) {
  if (text == "web") return RoomKind::web;
  if (text == "geo") return RoomKind::geo;
  fail(ErrorCode::invalid_argument, "room kind must be 'web' or 'geo'");
}

std::string room_for(const LocationRegistry& registry, const LocationId& location, RoomKind kind) {
  const auto& loc = registry.at(location);
  if (kind == RoomKind::web) return "web-" + location.str();
  if (!loc.point) {
    fail(ErrorCode::precondition,
         "location '" + location.str() + "' has no physical counterpart for a geo room");
  }
  return "geo-" + location.str();
}

LocationLoad load_locations(std::istream& in, bool strict) {
  LocationLoad result;
  LocationRegistry registry;
  std::string line;
  std::size_t line_no = 0;
  auto reject = [&](ErrorCode code, const std::string& why) {
    const std::string msg = "locations line " + std::to_string(line_no) + ": " + why;
    if (strict) fail(code, msg);
    ++result.rejected;
    result.warnings.push_back(msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = csv_fields(line);
    if (line_no == 1 && fields && !fields->empty() && ascii_lower((*fields)[0]) == "location_id") {
      continue;
    }
    if (!fields || fields->size() != 5) {
      reject(ErrorCode::invalid_argument, "expected 5 fields: location_id,name,lat,lon,url");
      continue;
    }
    const auto& f = *fields;
    try {
      std::optional<GeoPoint> point;
      if (!f[2].empty() || !f[3].empty()) {
        auto lat = parse_double(f[2]);
        auto lon = parse_double(f[3]);
        if (!lat || !lon) fail(ErrorCode::invalid_argument, "lat/lon must both be numbers");
        point = GeoPoint::make(*lat, *lon);
      }
      VirtualLocation loc(LocationId(f[0]), parse_urls(f[4]), point, f[1]);
      if (registry.contains(loc.id)) {
        reject(ErrorCode::conflict, "duplicate location id '" + f[0] + "'; keeping the first");
        continue;
      }
      registry.add(std::move(loc));
      ++result.loaded;
    } catch (const Error& e) {
      reject(e.code(), e.what());
    }
  }
  result.registry = std::move(registry);
  return result;
}

LocationLoad load_locations(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read locations file '" + path.string() + "'");
  return load_locations(in, strict);
}

void read_user_edges(std::istream& in, PresenceGraph& graph) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto f = split(line, '\t');
    auto w = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
    if (!w) {
      fail(ErrorCode::invalid_argument,
           "user edge line " + std::to_string(line_no) + ": expected user_a<TAB>user_b<TAB>weight");
    }
    graph.set_user_edge(UserId(std::string(f[0])), UserId(std::string(f[1])), *w);
  }
}

void PresenceState::sync_vertices() {
  for (const auto& [id, loc] : registry->locations()) graph.add_location(id);
}

void attach_measures(PresenceState& state, const ServiceConfig& config) {
  auto corpus = std::make_shared<LocationCorpus>();
  if (config.data.corpus_dir) *corpus = LocationCorpus::load_directory(*config.data.corpus_dir);
  std::vector<SimilarityMeasure> measures;
  for (const auto& [name, w] : config.measures) {
    if (name == "domain") {
      measures.push_back(domain_measure());
    } else if (name == "shingle") {
      measures.push_back(shingle_measure(corpus, config.shingle_len));
    } else {
      fail(ErrorCode::invalid_argument, "unknown measure '" + name + "'");
    }
  }
  auto table = SimilarityTable::from_measures(state.registry, std::move(measures),
                                              WeightVector(config.measures));
  for (const auto& [pair, w] : state.graph.location_edges().entries()) {
    table.set(pair.first, pair.second, w);
  }
  state.graph.location_edges() = std::move(table);
}

PresenceState load_state(const ServiceConfig& config, Epoch now) {
  PresenceState state;
  if (config.data.locations) {
    state.registry = std::make_shared<LocationRegistry>(
        load_locations(*config.data.locations, config.strict).registry);
  }
  if (config.data.visits) {
    std::ifstream in(*config.data.visits);
    if (!in) fail(ErrorCode::io, "cannot read visit log '" + config.data.visits->string() + "'");
    state.visits = read_visit_log(in, *state.registry, now);
  }
  if (config.data.user_edges) {
    std::ifstream in(*config.data.user_edges);
    if (!in) fail(ErrorCode::io, "cannot read user edges '" + config.data.user_edges->string() + "'");
    read_user_edges(in, state.graph);
  }
  attach_measures(state, config);
  state.sync_vertices();
  return state;
}

std::string snapshot(const PresenceState& state) {
  json visits = json::array();
  for (const auto& [key, list] : state.visits.entries()) {
    for (const auto& v : list) visits.push_back({key.first.str(), key.second.str(), v.start, v.end});
  }
  json open = json::array();
  for (const auto& [key, start] : state.visits.open_visits()) {
    open.push_back({key.first.str(), key.second.str(), start});
  }
  json users = json::array();
  for (const auto& u : state.graph.users()) users.push_back(u.str());
  json locations = json::array();
  for (const auto& l : state.graph.locations()) locations.push_back(l.str());
  json user_edges = json::array();
  for (const auto& [pair, w] : state.graph.user_edges()) {
    user_edges.push_back({pair.first.str(), pair.second.str(), w});
  }
  json location_edges = json::array();
  for (const auto& [pair, w] : state.graph.location_edges().entries()) {
    location_edges.push_back({pair.first.str(), pair.second.str(), w});
  }
  json presence_edges = json::array();
  for (const auto& u : state.graph.users()) {
    for (const auto& [loc, w] : state.graph.presence_of(u)) {
      presence_edges.push_back({u.str(), loc.str(), w});
    }
  }
  const json body{{"locations", registry_json(*state.registry)},
                  {"visits", visits},
                  {"open_visits", open},
                  {"graph",
                   {{"users", users},
                    {"locations", locations},
                    {"user_edges", user_edges},
                    {"location_edges", location_edges},
                    {"presence_edges", presence_edges}}},
                  {"refreshed_at", state.refreshed_at}};
  const std::string text = body.dump();
  char crc[9];
  std::snprintf(crc, sizeof crc, "%08x", crc_of(text));
  return "PRESENCE-SNAPSHOT " + std::to_string(kSnapshotVersion) + "\n" +
         std::to_string(text.size()) + " " + crc + "\n" + text;
}

PresenceState restore(const std::string& archive) {
  const auto first = archive.find('\n');
  const auto second = first == std::string::npos ? first : archive.find('\n', first + 1);
  if (second == std::string::npos) fail(ErrorCode::corrupt, "snapshot header is truncated");
  const auto magic = split(std::string_view(archive).substr(0, first), ' ');
  if (magic.size() != 2 || magic[0] != "PRESENCE-SNAPSHOT") {
    fail(ErrorCode::corrupt, "not a presence snapshot");
  }
  const auto version = parse_int<int>(magic[1]);
  if (!version || *version != kSnapshotVersion) {
    fail(ErrorCode::corrupt, "snapshot version " + std::string(magic[1]) + " is not supported (expected " +
                                 std::to_string(kSnapshotVersion) + ")");
  }
  const auto sizes = split(std::string_view(archive).substr(first + 1, second - first - 1), ' ');
  const auto length = sizes.size() == 2 ? parse_int<std::size_t>(sizes[0]) : std::nullopt;
  std::uint32_t expected_crc = 0;
  if (sizes.size() != 2 ||
      std::from_chars(sizes[1].data(), sizes[1].data() + sizes[1].size(), expected_crc, 16).ptr !=
          sizes[1].data() + sizes[1].size()) {
    fail(ErrorCode::corrupt, "snapshot header is malformed");
  }
  const std::string_view body = std::string_view(archive).substr(second + 1);
  if (!length || body.size() != *length) {
    fail(ErrorCode::corrupt, "snapshot body length mismatch (truncated archive?)");
  }
  if (crc_of(body) != expected_crc) fail(ErrorCode::corrupt, "snapshot checksum mismatch");

  PresenceState state;
  try {
    const json doc = json::parse(body);
    auto registry = std::make_shared<LocationRegistry>();
    for (const auto& l : doc.at("locations")) {
      std::vector<VirtualCoordinate> coords;
      for (const auto& c : l.at("coordinates")) coords.emplace_back(c.get<std::string>());
      std::optional<GeoPoint> point;
      if (!l.at("point").is_null()) point = GeoPoint::make(l["point"][0], l["point"][1]);
      registry->add(VirtualLocation(LocationId(l.at("id").get<std::string>()), std::move(coords),
                                    point, l.at("name").get<std::string>()));
    }
    state.registry = std::move(registry);
    for (const auto& v : doc.at("visits")) {
      state.visits.insert(UserId(v[0].get<std::string>()), LocationId(v[1].get<std::string>()),
                          VisitInterval::make(v[2].get<Epoch>(), v[3].get<Epoch>()));
    }
    for (const auto& v : doc.at("open_visits")) {
      state.visits.open(UserId(v[0].get<std::string>()), LocationId(v[1].get<std::string>()),
                        v[2].get<Epoch>());
    }
    const auto& g = doc.at("graph");
    for (const auto& u : g.at("users")) state.graph.add_user(UserId(u.get<std::string>()));
    for (const auto& l : g.at("locations")) state.graph.add_location(LocationId(l.get<std::string>()));
    for (const auto& e : g.at("user_edges")) {
      state.graph.set_user_edge(UserId(e[0].get<std::string>()), UserId(e[1].get<std::string>()),
                                e[2].get<double>());
    }
    for (const auto& e : g.at("location_edges")) {
      state.graph.location_edges().set(LocationId(e[0].get<std::string>()),
                                       LocationId(e[1].get<std::string>()), e[2].get<double>());
    }
    for (const auto& e : g.at("presence_edges")) {
      state.graph.set_presence_edge(UserId(e[0].get<std::string>()),
                                    LocationId(e[1].get<std::string>()), e[2].get<double>());
    }
    state.refreshed_at = doc.at("refreshed_at").get<Epoch>();
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("snapshot body is malformed: ") + e.what());
  }
  return state;
}

void write_snapshot(const std::filesystem::path& path, const PresenceState& state) {
  const std::string archive = snapshot(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write snapshot '" + path.string() + "'");
  out.write(archive.data(), static_cast<std::streamsize>(archive.size()));
  if (!out) fail(ErrorCode::io, "failed writing snapshot '" + path.string() + "'");
}

PresenceState read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read snapshot '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return restore(text.str());
}

bool same_state(const PresenceState& a, const PresenceState& b) {
  if (!(*a.registry == *b.registry) || !(a.visits == b.visits)) return false;
  if (a.refreshed_at != b.refreshed_at) return false;
  const auto& ga = a.graph;
  const auto& gb = b.graph;
  if (ga.users() != gb.users() || ga.locations() != gb.locations()) return false;
  if (ga.user_edges() != gb.user_edges()) return false;
  if (ga.location_edges().entries() != gb.location_edges().entries()) return false;
  for (const auto& u : ga.users()) {
    if (ga.presence_of(u) != gb.presence_of(u)) return false;
  }
  return true;
}

}  // namespace presence::gateway
