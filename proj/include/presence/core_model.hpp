#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "presence/error.hpp"
#include "presence/geo_point.hpp"

namespace presence {

/// Integer epoch seconds. Sub-second precision is not modelled.
using Epoch = std::int64_t;

template <class Tag>
class Identifier {
 public:
  explicit Identifier(std::string value) : value_(std::move(value)) {
    if (value_.empty()) fail(ErrorCode::invalid_argument, "identifier must be non-empty");
  }

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const Identifier&, const Identifier&) = default;
  friend bool operator==(const Identifier&, const Identifier&) = default;

 private:
  std::string value_;
};

using UserId = Identifier<struct UserTag>;
using LocationId = Identifier<struct LocationTag>;

/// An absolute URI naming one web resource. Scheme and host compare
/// case-insensitively; they are stored lowercased.
class VirtualCoordinate {
 public:
  explicit VirtualCoordinate(std::string_view uri);

  const std::string& str() const noexcept { return uri_; }
  const std::string& scheme() const noexcept { return scheme_; }
  // Empty for URIs without an authority component (e.g. urn:).
  const std::string& host() const noexcept { return host_; }

  friend auto operator<=>(const VirtualCoordinate& a, const VirtualCoordinate& b) {
    return a.uri_ <=> b.uri_;
  }
  friend bool operator==(const VirtualCoordinate& a, const VirtualCoordinate& b) {
    return a.uri_ == b.uri_;
  }

 private:
  std::string uri_;
  std::string scheme_;
  std::string host_;
};

struct VirtualLocation {
  LocationId id;
  std::string name;
  std::vector<VirtualCoordinate> coordinates;  // sorted, unique, non-empty
  std::optional<GeoPoint> point;               // physical counterpart, if any

  VirtualLocation(LocationId id, std::vector<VirtualCoordinate> coords,
                  std::optional<GeoPoint> point = std::nullopt, std::string name = {});

  friend bool operator==(const VirtualLocation&, const VirtualLocation&) = default;
};

/// Set of virtual locations whose coordinate sets form a partition: a
/// coordinate belongs to at most one location.
class LocationRegistry {
 public:
  void add(VirtualLocation location);

  bool contains(const LocationId& id) const { return locations_.count(id) != 0; }
  const VirtualLocation* find(const LocationId& id) const;
  const VirtualLocation& at(const LocationId& id) const;
  void require(const LocationId& id) const { (void)at(id); }

  std::optional<LocationId> owner_of(const VirtualCoordinate& coordinate) const;

  const std::map<LocationId, VirtualLocation>& locations() const noexcept { return locations_; }
  std::size_t size() const noexcept { return locations_.size(); }
  bool empty() const noexcept { return locations_.empty(); }

  // Locations with a geo binding, in id order.
  std::vector<const VirtualLocation*> bound() const;

  friend bool operator==(const LocationRegistry&, const LocationRegistry&) = default;

 private:
  std::map<LocationId, VirtualLocation> locations_;
  std::map<std::string, LocationId> owners_;
};

struct VisitInterval {
  Epoch start = 0;
  Epoch end = 0;

  static VisitInterval make(Epoch start, Epoch end);

  Epoch length() const noexcept { return end - start; }

  friend bool operator==(const VisitInterval&, const VisitInterval&) = default;
};

/// Sorts and merges overlapping or touching intervals in place.
void normalize(std::vector<VisitInterval>& intervals);

struct OpenVisit {
  UserId user;
  LocationId location;
  Epoch start;

  friend bool operator==(const OpenVisit&, const OpenVisit&) = default;
};

/// Closed visit intervals per (user, location) pair, kept normalized, plus
/// open-ended visits that have been entered but not yet left.
class VisitLog {
 public:
  using Key = std::pair<UserId, LocationId>;

  // Unvalidated insert; see add_visit() for the checked entry point.
  void insert(const UserId& user, const LocationId& location, VisitInterval interval);

  std::span<const VisitInterval> intervals(const UserId& user, const LocationId& location) const;

  /// All (location, intervals) pairs for one user, ordered by location id.
  std::vector<std::pair<LocationId, std::span<const VisitInterval>>> visits_of(
      const UserId& user) const;

  std::vector<UserId> users() const;
  Epoch latest_end(const UserId& user) const;  // 0 when the user has no visits

  void open(const UserId& user, const LocationId& location, Epoch start);
  /// Removes an open visit with this start, if any. Returns true when one existed.
  bool close_open(const UserId& user, const LocationId& location, Epoch start);
  const std::map<Key, Epoch>& open_visits() const noexcept { return open_; }

  /// Copy of this log where every open visit is closed at `now`.
  VisitLog materialized(Epoch now) const;

  const std::map<Key, std::vector<VisitInterval>>& entries() const noexcept { return entries_; }
  std::size_t interval_count() const noexcept;

  friend bool operator==(const VisitLog&, const VisitLog&) = default;

 private:
  std::map<Key, std::vector<VisitInterval>> entries_;
  std::map<Key, Epoch> open_;
};

void add_visit(VisitLog& log, const LocationRegistry& registry, const UserId& user,
               const LocationId& location, VisitInterval interval, Epoch now);

/// Undecayed time (seconds) the user spent at the location.
Epoch total_visit_time(const VisitLog& log, const LocationRegistry& registry, const UserId& user,
                       const LocationId& location);

// Line format: user_id<TAB>location_id<TAB>start_epoch<TAB>end_epoch
void write_visit_log(std::ostream& out, const VisitLog& log);
VisitLog read_visit_log(std::istream& in, const LocationRegistry& registry, Epoch now);

Epoch wall_clock_now();

}  // namespace presence

template <class Tag>
struct std::hash<presence::Identifier<Tag>> {
  std::size_t operator()(const presence::Identifier<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
