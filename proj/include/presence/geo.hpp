#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "presence/core_model.hpp"
#include "presence/geo_point.hpp"

namespace presence {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

/// Great-circle distance in meters.
double haversine(const GeoPoint& a, const GeoPoint& b);

struct NearestHit {
  LocationId location;
  double meters;

  friend bool operator==(const NearestHit&, const NearestHit&) = default;
};

/// Closest geo-bound location with distance <= radius (inclusive); ties go
/// to the smaller location id.
std::optional<NearestHit> nearest_location(const LocationRegistry& registry, const GeoPoint& at,
                                           double radius_m);

struct VisitParams {
  double r_v = 100.0;  // vicinity radius, meters
  Epoch t_v_min = 60;  // minimum dwell, seconds
  Epoch gap_max = 5;   // a reading gap longer than this splits a visit

  void validate() const;
};

struct GeoReading {
  Epoch time;
  GeoPoint point;

  friend bool operator==(const GeoReading&, const GeoReading&) = default;
};

/// Time-ordered GPS readings with strictly increasing timestamps.
class GeoTrack {
 public:
  GeoTrack() = default;
  explicit GeoTrack(std::vector<GeoReading> readings);

  /// CSV rows `epoch_seconds,lat,lon`; a non-numeric first row is a header.
  static GeoTrack read_csv(std::istream& in);

  std::span<const GeoReading> readings() const noexcept { return readings_; }
  std::size_t size() const noexcept { return readings_.size(); }
  bool empty() const noexcept { return readings_.empty(); }

 private:
  std::vector<GeoReading> readings_;
};

struct DetectedVisit {
  LocationId location;
  VisitInterval interval;

  friend bool operator==(const DetectedVisit&, const DetectedVisit&) = default;
};

/// Stay detection per bound location: maximal runs of readings within r_v,
/// broken by gaps over gap_max, kept when last - first >= t_v_min. A reading
/// can belong to several locations at once. Sorted by (location, start).
std::vector<DetectedVisit> detect_visits(const GeoTrack& track, const LocationRegistry& registry,
                                         const VisitParams& params);

/// Dwell runs from readings and their precomputed distances to one
/// location; the building block of detect_visits().
std::vector<VisitInterval> dwell_runs(std::span<const GeoReading> readings,
                                      std::span<const double> distances_m,
                                      const VisitParams& params);

VisitLog to_visit_log(std::span<const DetectedVisit> visits, const UserId& user);

struct Region {
  double lat_min;
  double lon_min;
  double lat_max;
  double lon_max;

  void validate() const;
  bool contains(const GeoPoint& p) const noexcept {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

/// Equirectangular projection to meters east/north of the region's
/// south-west corner, scaled at the region's middle latitude.
class LocalProjection {
 public:
  explicit LocalProjection(const Region& region);
  LocalProjection(const GeoPoint& origin, double reference_lat);

  std::pair<double, double> to_xy(const GeoPoint& p) const noexcept;
  GeoPoint from_xy(double x, double y) const noexcept;

 private:
  GeoPoint origin_;
  double meters_per_deg_lat_;
  double meters_per_deg_lon_;
};

/// Square grid anchored at the region's south-west corner. Squares on the
/// north/east edge may extend past the region.
class Grid {
 public:
  Grid(const Region& region, double square_m);

  std::size_t columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return columns_ * rows_; }
  double square() const noexcept { return square_; }
  const LocalProjection& projection() const noexcept { return projection_; }

  std::pair<double, double> center(std::size_t index) const noexcept;
  /// Index of the square holding an in-region point.
  std::size_t index_of(const GeoPoint& p) const noexcept;

 private:
  Region region_;
  double square_;
  LocalProjection projection_;
  std::size_t columns_;
  std::size_t rows_;
};

/// Percentage of grid squares whose center lies within r_v (inclusive) of
/// some bound location, measured in the local projection.
double coverage_percent(const LocationRegistry& registry, const Region& region, double square_m,
                        double r_v);

/// Locations-per-square -> number of squares, over non-empty squares only.
std::map<std::size_t, std::size_t> grid_distribution(const LocationRegistry& registry,
                                                     const Region& region, double square_m);

namespace reference {

std::vector<DetectedVisit> detect_visits(const GeoTrack& track, const LocationRegistry& registry,
                                         const VisitParams& params);
double coverage_percent(const LocationRegistry& registry, const Region& region, double square_m,
                        double r_v);

}  // namespace reference

}  // namespace presence
