#pragma once

#include <compare>

namespace presence {

/// WGS84 latitude/longitude in degrees. Construction through make() checks
/// bounds; aggregate init is left open for constexpr test fixtures.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  static GeoPoint make(double lat, double lon);

  bool valid() const noexcept {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

}  // namespace presence
