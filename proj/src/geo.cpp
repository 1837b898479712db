#include "presence/geo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <unordered_map>

#include "presence/text_util.hpp"

namespace presence {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Projection round-off allowance for the inclusive radius test.
constexpr double kBoundaryToleranceM = 1e-6;

void require_valid(const GeoPoint& p) {
  if (!p.valid()) (void)GeoPoint::make(p.lat, p.lon);
}

std::vector<VisitInterval> runs_near(std::span<const GeoReading> readings, const GeoPoint& target,
                                     const VisitParams& params) {
  std::vector<double> distances;
  distances.reserve(readings.size());
  for (const auto& r : readings) distances.push_back(haversine(r.point, target));
  return dwell_runs(readings, distances, params);
}

std::vector<DetectedVisit> flatten(const std::vector<const VirtualLocation*>& bound,
                                   const std::vector<std::vector<VisitInterval>>& runs) {
  std::vector<DetectedVisit> out;
  for (std::size_t i = 0; i < bound.size(); ++i) {
    for (const auto& v : runs[i]) out.push_back({bound[i]->id, v});
  }
  return out;
}

void check_grid_args(const Region& region, double square_m) {
  region.validate();
  if (!(square_m > 0.0) || !std::isfinite(square_m)) {
    fail(ErrorCode::invalid_argument, "grid square size must be positive");
  }
}

}  // namespace

double haversine(const GeoPoint& a, const GeoPoint& b) {
  require_valid(a);
  require_valid(b);
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * t * t;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

std::optional<NearestHit> nearest_location(const LocationRegistry& registry, const GeoPoint& at,
                                           double radius_m) {
  if (!(radius_m > 0.0)) fail(ErrorCode::invalid_argument, "radius must be positive");
  require_valid(at);
  std::optional<NearestHit> best;
  // Registry iteration is in id order, so strict < keeps the smallest id on ties.
  for (const auto* loc : registry.bound()) {
    const double d = haversine(at, *loc->point);
    if (d <= radius_m && (!best || d < best->meters)) best = NearestHit{loc->id, d};
  }
  return best;
}

void VisitParams::validate() const {
  if (!(r_v > 0.0) || !std::isfinite(r_v)) {
    fail(ErrorCode::invalid_argument, "vicinity radius must be positive");
  }
  if (t_v_min < 0) fail(ErrorCode::invalid_argument, "minimum visiting time must be >= 0");
  if (gap_max < 1) fail(ErrorCode::invalid_argument, "gap_max must be >= 1 second");
}

GeoTrack::GeoTrack(std::vector<GeoReading> readings) : readings_(std::move(readings)) {
  for (std::size_t i = 0; i < readings_.size(); ++i) {
    require_valid(readings_[i].point);
    if (i > 0 && readings_[i].time <= readings_[i - 1].time) {
      fail(ErrorCode::invalid_argument,
           "track timestamps must be strictly increasing (reading " + std::to_string(i) + ")");
    }
  }
}

GeoTrack GeoTrack::read_csv(std::istream& in) {
  std::vector<GeoReading> readings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    auto fields = split(row, ',');
    if (fields.size() != 3) {
      fail(ErrorCode::invalid_argument,
           "track line " + std::to_string(line_no) + ": expected epoch_seconds,lat,lon");
    }
    auto t = parse_int<Epoch>(trim(fields[0]));
    if (!t && line_no == 1) continue;  // header
    auto lat = parse_double(trim(fields[1]));
    auto lon = parse_double(trim(fields[2]));
    if (!t || !lat || !lon) {
      fail(ErrorCode::invalid_argument, "track line " + std::to_string(line_no) + ": bad number");
    }
    readings.push_back({*t, GeoPoint::make(*lat, *lon)});
  }
  return GeoTrack(std::move(readings));
}

std::vector<DetectedVisit> detect_visits(const GeoTrack& track, const LocationRegistry& registry,
                                         const VisitParams& params) {
  params.validate();
  if (track.empty()) fail(ErrorCode::invalid_argument, "track is empty");
  const auto bound = registry.bound();
  std::vector<std::vector<VisitInterval>> runs(bound.size());
  const auto n = static_cast<std::ptrdiff_t>(bound.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    runs[k] = runs_near(track.readings(), *bound[k]->point, params);
  }
  return flatten(bound, runs);
}

std::vector<VisitInterval> dwell_runs(std::span<const GeoReading> readings,
                                      std::span<const double> distances_m,
                                      const VisitParams& params) {
  if (readings.size() != distances_m.size()) {
    fail(ErrorCode::invalid_argument, "one distance per reading required");
  }
  std::vector<VisitInterval> out;
  std::optional<VisitInterval> run;
  Epoch previous = 0;
  auto flush = [&] {
    if (run && run->length() >= params.t_v_min) out.push_back(*run);
    run.reset();
  };
  for (std::size_t i = 0; i < readings.size(); ++i) {
    const Epoch t = readings[i].time;
    const bool inside = distances_m[i] <= params.r_v;
    if (run && (!inside || t - previous > params.gap_max)) flush();
    if (inside) {
      if (run) {
        run->end = t;
      } else {
        run = VisitInterval{t, t};
      }
    }
    previous = t;
  }
  flush();
  return out;
}

VisitLog to_visit_log(std::span<const DetectedVisit> visits, const UserId& user) {
  VisitLog log;
  for (const auto& v : visits) log.insert(user, v.location, v.interval);
  return log;
}

void Region::validate() const {
  if (!GeoPoint{lat_min, lon_min}.valid() || !GeoPoint{lat_max, lon_max}.valid()) {
    fail(ErrorCode::invalid_argument, "region corners out of range");
  }
  if (!(lat_max > lat_min) || !(lon_max > lon_min)) {
    fail(ErrorCode::invalid_argument, "degenerate region");
  }
}

LocalProjection::LocalProjection(const Region& region)
    : LocalProjection(GeoPoint{region.lat_min, region.lon_min},
                      0.5 * (region.lat_min + region.lat_max)) {}

LocalProjection::LocalProjection(const GeoPoint& origin, double reference_lat)
    : origin_(origin),
      meters_per_deg_lat_(kEarthRadiusMeters * kDegToRad),
      meters_per_deg_lon_(kEarthRadiusMeters * kDegToRad * std::cos(reference_lat * kDegToRad)) {}

std::pair<double, double> LocalProjection::to_xy(const GeoPoint& p) const noexcept {
  return {(p.lon - origin_.lon) * meters_per_deg_lon_, (p.lat - origin_.lat) * meters_per_deg_lat_};
}

GeoPoint LocalProjection::from_xy(double x, double y) const noexcept {
  return {origin_.lat + y / meters_per_deg_lat_, origin_.lon + x / meters_per_deg_lon_};
}

Grid::Grid(const Region& region, double square_m)
    : region_(region), square_(square_m), projection_(region) {
  check_grid_args(region, square_m);
  const auto [width, height] = projection_.to_xy({region.lat_max, region.lon_max});
  // Allow for round-off so a 300 m extent is 3 squares of 100 m, not 4.
  auto count = [&](double extent) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / square_m - 1e-9)));
  };
  columns_ = count(width);
  rows_ = count(height);
}

std::pair<double, double> Grid::center(std::size_t index) const noexcept {
  const auto col = index % columns_;
  const auto row = index / columns_;
  return {(static_cast<double>(col) + 0.5) * square_, (static_cast<double>(row) + 0.5) * square_};
}

std::size_t Grid::index_of(const GeoPoint& p) const noexcept {
  const auto [x, y] = projection_.to_xy(p);
  auto cell = [&](double v, std::size_t limit) {
    const double f = std::floor(std::max(0.0, v) / square_);
    return std::min(limit - 1, static_cast<std::size_t>(f));
  };
  return cell(y, rows_) * columns_ + cell(x, columns_);
}

double coverage_percent(const LocationRegistry& registry, const Region& region, double square_m,
                        double r_v) {
  const Grid grid(region, square_m);
  if (!(r_v > 0.0)) fail(ErrorCode::invalid_argument, "vicinity radius must be positive");
  const auto bound = registry.bound();
  if (bound.empty()) return 0.0;

  // Bucket projected locations by cells one search radius wide; a center can only be
  // covered by points in its own or a neighbouring bucket.
  struct CellHash {
    std::size_t operator()(const std::pair<long long, long long>& c) const noexcept {
      return std::hash<long long>{}(c.first * 73856093LL ^ c.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<long long, long long>, std::vector<std::pair<double, double>>,
                     CellHash>
      buckets;
  const double limit = r_v + kBoundaryToleranceM;
  auto cell_of = [limit](double x, double y) {
    return std::pair{static_cast<long long>(std::floor(x / limit)),
                     static_cast<long long>(std::floor(y / limit))};
  };
  for (const auto* loc : bound) {
    const auto [x, y] = grid.projection().to_xy(*loc->point);
    buckets[cell_of(x, y)].emplace_back(x, y);
  }

  const auto squares = static_cast<std::ptrdiff_t>(grid.size());
  std::ptrdiff_t covered = 0;
#pragma omp parallel for schedule(static) reduction(+ : covered)
  for (std::ptrdiff_t i = 0; i < squares; ++i) {
    const auto [cx, cy] = grid.center(static_cast<std::size_t>(i));
    const auto [gx, gy] = cell_of(cx, cy);
    bool hit = false;
    for (long long dx = -1; dx <= 1 && !hit; ++dx) {
      for (long long dy = -1; dy <= 1 && !hit; ++dy) {
        auto it = buckets.find({gx + dx, gy + dy});
        if (it == buckets.end()) continue;
        for (const auto& [x, y] : it->second) {
          if (std::hypot(x - cx, y - cy) <= limit) {
            hit = true;
            break;
          }
        }
      }
    }
    if (hit) ++covered;
  }
  return 100.0 * static_cast<double>(covered) / static_cast<double>(grid.size());
}

std::map<std::size_t, std::size_t> grid_distribution(const LocationRegistry& registry,
                                                     const Region& region, double square_m) {
  const Grid grid(region, square_m);
  std::map<std::size_t, std::size_t> per_square;
  for (const auto* loc : registry.bound()) {
    if (region.contains(*loc->point)) ++per_square[grid.index_of(*loc->point)];
  }
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [square, count] : per_square) ++histogram[count];
  return histogram;
}

namespace reference {

std::vector<DetectedVisit> detect_visits(const GeoTrack& track, const LocationRegistry& registry,
                                         const VisitParams& params) {
  params.validate();
  if (track.empty()) fail(ErrorCode::invalid_argument, "track is empty");
  const auto bound = registry.bound();
  std::vector<std::vector<VisitInterval>> runs;
  for (const auto* loc : bound) runs.push_back(runs_near(track.readings(), *loc->point, params));
  return flatten(bound, runs);
}

double coverage_percent(const LocationRegistry& registry, const Region& region, double square_m,
                        double r_v) {
  const Grid grid(region, square_m);
  if (!(r_v > 0.0)) fail(ErrorCode::invalid_argument, "vicinity radius must be positive");
  std::vector<std::pair<double, double>> points;
  for (const auto* loc : registry.bound()) points.push_back(grid.projection().to_xy(*loc->point));
  std::size_t covered = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto [cx, cy] = grid.center(i);
    for (const auto& [x, y] : points) {
      if (std::hypot(x - cx, y - cy) <= r_v + kBoundaryToleranceM) {
        ++covered;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(covered) / static_cast<double>(grid.size());
}

}  // namespace reference

}  // namespace presence
