#include "presence/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include "presence/text_util.hpp"

namespace presence {

GeoPoint GeoPoint::make(double lat, double lon) {
  GeoPoint p{lat, lon};
  if (!p.valid()) {
    std::ostringstream msg;
    msg << "geo point out of range: (" << lat << ", " << lon << ")";
    fail(ErrorCode::invalid_argument, msg.str());
  }
  return p;
}

namespace {

// RFC 3986, appendix B.
const std::regex& uri_pattern() {
  static const std::regex re(R"(^(([^:/?#]+):)?(//([^/?#]*))?([^?#]*)(\?([^#]*))?(#(.*))?$)");
  return re;
}

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  });
}

}  // namespace

VirtualCoordinate::VirtualCoordinate(std::string_view uri) {
  const std::string raw(uri);
  auto bad = [&](const char* why) {
    fail(ErrorCode::invalid_argument, "invalid URI '" + raw + "': " + why);
  };
  if (raw.empty()) bad("empty");
  if (std::any_of(raw.begin(), raw.end(),
                  [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; })) {
    bad("contains whitespace");
  }
  std::smatch m;
  if (!std::regex_match(raw, m, uri_pattern())) bad("unparsable");
  if (!m[1].matched || !valid_scheme(m[2].str())) bad("not absolute");

  scheme_ = ascii_lower(m[2].str());
  std::string out = scheme_ + ":";
  if (m[3].matched) {
    std::string authority = m[4].str();
    std::string userinfo;
    if (auto at = authority.rfind('@'); at != std::string::npos) {
      userinfo = authority.substr(0, at + 1);
      authority = authority.substr(at + 1);
    }
    std::string port;
    if (!authority.empty() && authority.front() == '[') {
      auto close = authority.find(']');
      if (close == std::string::npos) bad("unterminated IPv6 literal");
      port = authority.substr(close + 1);
      authority = authority.substr(0, close + 1);
    } else if (auto colon = authority.rfind(':'); colon != std::string::npos) {
      port = authority.substr(colon);
      authority = authority.substr(0, colon);
    }
    if (!port.empty()) {
      if (port.front() != ':' ||
          !std::all_of(port.begin() + 1, port.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        bad("invalid port");
      }
    }
    host_ = ascii_lower(authority);
    if (host_.empty() && (scheme_ == "http" || scheme_ == "https")) bad("missing host");
    out += "//" + userinfo + host_ + port;
  }
  out += m[5].str();
  if (m[6].matched) out += m[6].str();
  if (m[8].matched) out += m[8].str();
  uri_ = std::move(out);
}

VirtualLocation::VirtualLocation(LocationId id_, std::vector<VirtualCoordinate> coords,
                                 std::optional<GeoPoint> point_, std::string name_)
    : id(std::move(id_)), name(std::move(name_)), coordinates(std::move(coords)), point(point_) {
  std::sort(coordinates.begin(), coordinates.end());
  coordinates.erase(std::unique(coordinates.begin(), coordinates.end()), coordinates.end());
  if (coordinates.empty()) {
    fail(ErrorCode::invalid_argument, "location '" + id.str() + "' has no virtual coordinates");
  }
  if (point && !point->valid()) {
    fail(ErrorCode::invalid_argument, "location '" + id.str() + "' has an out-of-range geo point");
  }
}

void LocationRegistry::add(VirtualLocation location) {
  if (locations_.count(location.id)) {
    fail(ErrorCode::conflict, "duplicate location id '" + location.id.str() + "'");
  }
  for (const auto& c : location.coordinates) {
    if (auto it = owners_.find(c.str()); it != owners_.end()) {
      fail(ErrorCode::conflict, "coordinate '" + c.str() + "' already belongs to location '" +
                                    it->second.str() + "'");
    }
  }
  for (const auto& c : location.coordinates) owners_.emplace(c.str(), location.id);
  auto id = location.id;
  locations_.emplace(std::move(id), std::move(location));
}

const VirtualLocation* LocationRegistry::find(const LocationId& id) const {
  auto it = locations_.find(id);
  return it == locations_.end() ? nullptr : &it->second;
}

const VirtualLocation& LocationRegistry::at(const LocationId& id) const {
  if (const auto* loc = find(id)) return *loc;
  fail(ErrorCode::not_found, "unknown location '" + id.str() + "'");
}

std::optional<LocationId> LocationRegistry::owner_of(const VirtualCoordinate& coordinate) const {
  if (auto it = owners_.find(coordinate.str()); it != owners_.end()) return it->second;
  return std::nullopt;
}

std::vector<const VirtualLocation*> LocationRegistry::bound() const {
  std::vector<const VirtualLocation*> out;
  for (const auto& [id, loc] : locations_) {
    if (loc.point) out.push_back(&loc);
  }
  return out;
}

VisitInterval VisitInterval::make(Epoch start, Epoch end) {
  if (start > end) {
    fail(ErrorCode::invalid_argument, "visit interval start " + std::to_string(start) +
                                          " is after end " + std::to_string(end));
  }
  return {start, end};
}

void normalize(std::vector<VisitInterval>& intervals) {
  if (intervals.size() < 2) return;
  std::sort(intervals.begin(), intervals.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  std::size_t w = 0;
  for (std::size_t r = 1; r < intervals.size(); ++r) {
    if (intervals[r].start <= intervals[w].end) {
      intervals[w].end = std::max(intervals[w].end, intervals[r].end);
    } else {
      intervals[++w] = intervals[r];
    }
  }
  intervals.resize(w + 1);
}

void VisitLog::insert(const UserId& user, const LocationId& location, VisitInterval interval) {
  auto& list = entries_[{user, location}];
  // Insert at the sorted position and merge with neighbours.
  auto it = std::lower_bound(list.begin(), list.end(), interval,
                             [](const auto& a, const auto& b) { return a.start < b.start; });
  it = list.insert(it, interval);
  auto first = it;
  while (first != list.begin() && std::prev(first)->end >= it->start) --first;
  auto last = std::next(it);
  Epoch end = it->end;
  Epoch start = first->start;
  for (auto j = first; j != it; ++j) end = std::max(end, j->end);
  while (last != list.end() && last->start <= end) {
    end = std::max(end, last->end);
    ++last;
  }
  *first = VisitInterval{start, end};
  list.erase(std::next(first), last);
}

std::span<const VisitInterval> VisitLog::intervals(const UserId& user,
                                                   const LocationId& location) const {
  auto it = entries_.find({user, location});
  if (it == entries_.end()) return {};
  return it->second;
}

std::vector<std::pair<LocationId, std::span<const VisitInterval>>> VisitLog::visits_of(
    const UserId& user) const {
  std::vector<std::pair<LocationId, std::span<const VisitInterval>>> out;
  for (auto it = entries_.lower_bound({user, LocationId(std::string(1, '\0'))});
       it != entries_.end() && it->first.first == user; ++it) {
    out.emplace_back(it->first.second, std::span<const VisitInterval>(it->second));
  }
  return out;
}

std::vector<UserId> VisitLog::users() const {
  std::vector<UserId> out;
  for (const auto& [key, list] : entries_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  for (const auto& [key, start] : open_) out.push_back(key.first);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Epoch VisitLog::latest_end(const UserId& user) const {
  Epoch latest = 0;
  for (const auto& [loc, list] : visits_of(user)) {
    if (!list.empty()) latest = std::max(latest, list.back().end);
  }
  return latest;
}

void VisitLog::open(const UserId& user, const LocationId& location, Epoch start) {
  auto [it, inserted] = open_.emplace(Key{user, location}, start);
  if (!inserted) {
    fail(ErrorCode::conflict, "user '" + user.str() + "' already has an open visit at '" +
                                  location.str() + "'");
  }
}

bool VisitLog::close_open(const UserId& user, const LocationId& location, Epoch start) {
  auto it = open_.find({user, location});
  if (it == open_.end() || it->second != start) return false;
  open_.erase(it);
  return true;
}

VisitLog VisitLog::materialized(Epoch now) const {
  VisitLog out;
  out.entries_ = entries_;
  for (const auto& [key, start] : open_) {
    out.insert(key.first, key.second, VisitInterval{start, std::max(start, now)});
  }
  return out;
}

std::size_t VisitLog::interval_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [key, list] : entries_) n += list.size();
  return n;
}

void add_visit(VisitLog& log, const LocationRegistry& registry, const UserId& user,
               const LocationId& location, VisitInterval interval, Epoch now) {
  registry.require(location);
  if (interval.start > interval.end) {
    fail(ErrorCode::invalid_argument, "visit interval start " + std::to_string(interval.start) +
                                          " is after end " + std::to_string(interval.end));
  }
  if (interval.end > now) {
    fail(ErrorCode::invalid_argument, "visit interval ends in the future (" +
                                          std::to_string(interval.end) + " > " +
                                          std::to_string(now) + ")");
  }
  log.insert(user, location, interval);
}

Epoch total_visit_time(const VisitLog& log, const LocationRegistry& registry, const UserId& user,
                       const LocationId& location) {
  registry.require(location);
  Epoch total = 0;
  for (const auto& v : log.intervals(user, location)) total += v.length();
  return total;
}

void write_visit_log(std::ostream& out, const VisitLog& log) {
  for (const auto& [key, list] : log.entries()) {
    for (const auto& v : list) {
      out << key.first.str() << '\t' << key.second.str() << '\t' << v.start << '\t' << v.end
          << '\n';
    }
  }
}

VisitLog read_visit_log(std::istream& in, const LocationRegistry& registry, Epoch now) {
  VisitLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    auto where = [&] { return "visit log line " + std::to_string(line_no) + ": "; };
    if (fields.size() != 4) fail(ErrorCode::invalid_argument, where() + "expected 4 fields");
    auto start = parse_int<Epoch>(fields[2]);
    auto end = parse_int<Epoch>(fields[3]);
    if (!start || !end) fail(ErrorCode::invalid_argument, where() + "bad epoch value");
    try {
      add_visit(log, registry, UserId(std::string(fields[0])), LocationId(std::string(fields[1])),
                VisitInterval{*start, *end}, now);
    } catch (const Error& e) {
      fail(e.code(), where() + e.what());
    }
  }
  return log;
}

Epoch wall_clock_now() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace presence
