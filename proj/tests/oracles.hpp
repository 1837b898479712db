#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

enum class DecayKind { exponential, linear, window };

struct Decay {
  DecayKind kind;
  double p;  // rate, horizon or width

  double at(double age) const {
    switch (kind) {
      case DecayKind::exponential: return std::exp(-p * age);
      case DecayKind::linear: return age >= p ? 0.0 : 1.0 - age / p;
      case DecayKind::window: return age <= p ? 1.0 : 0.0;
    }
    return 0.0;
  }
  double area() const {
    switch (kind) {
      case DecayKind::exponential: return 1.0 / p;
      case DecayKind::linear: return p / 2.0;
      case DecayKind::window: return p;
    }
    return 0.0;
  }
};

struct Span {
  std::int64_t start;
  std::int64_t end;
};

// One location's visits and its closeness to the queried location.
struct Track {
  double closeness;
  std::vector<Span> spans;
};

enum class Combine { sum, max };

/// Per-second midpoint Riemann sum of closeness-weighted time against the
/// decay, normalized by the decay's area. Spans are [start, end) seconds.
inline double riemann_presence(const std::vector<Track>& tracks, std::int64_t now, const Decay& d,
                               Combine combine) {
  std::int64_t first = now;
  for (const auto& t : tracks)
    for (const auto& s : t.spans) first = std::min(first, s.start);
  const std::size_t n = static_cast<std::size_t>(now - first);
  std::vector<double> w(n, 0.0);
  for (const auto& t : tracks) {
    for (const auto& s : t.spans) {
      for (std::int64_t sec = s.start; sec < s.end; ++sec) {
        double& slot = w[static_cast<std::size_t>(sec - first)];
        slot = combine == Combine::sum ? slot + t.closeness : std::max(slot, t.closeness);
      }
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const double age_min = (static_cast<double>(now - first - static_cast<std::int64_t>(i)) - 0.5) / 60.0;
    total += d.at(age_min) * w[i] / 60.0;
  }
  return total / d.area();
}

/// Composite Simpson with n (even) panels.
inline double composite_simpson(const std::function<double(double)>& f, double a, double b,
                                int n = 2000) {
  if (a == b) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Length of the union of closed intervals via a boolean timeline.
inline std::int64_t union_length(const std::vector<Span>& spans) {
  if (spans.empty()) return 0;
  std::int64_t lo = spans.front().start, hi = spans.front().end;
  for (const auto& s : spans) {
    lo = std::min(lo, s.start);
    hi = std::max(hi, s.end);
  }
  std::vector<bool> covered(static_cast<std::size_t>(hi - lo), false);
  for (const auto& s : spans)
    for (std::int64_t t = s.start; t < s.end; ++t) covered[static_cast<std::size_t>(t - lo)] = true;
  return std::count(covered.begin(), covered.end(), true);
}

/// Great-circle distance on a 6371 km sphere from the angle between unit
/// position vectors.
inline double great_circle_m(double lat1, double lon1, double lat2, double lon2) {
  const double r = std::numbers::pi / 180.0;
  const double x1 = std::cos(lat1 * r) * std::cos(lon1 * r), y1 = std::cos(lat1 * r) * std::sin(lon1 * r),
               z1 = std::sin(lat1 * r);
  const double x2 = std::cos(lat2 * r) * std::cos(lon2 * r), y2 = std::cos(lat2 * r) * std::sin(lon2 * r),
               z2 = std::sin(lat2 * r);
  // atan2 of |cross| and dot stays accurate for small and antipodal angles.
  const double cx = y1 * z2 - z1 * y2, cy = z1 * x2 - x1 * z2, cz = x1 * y2 - y1 * x2;
  const double angle = std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), x1 * x2 + y1 * y2 + z1 * z2);
  return 6371000.0 * angle;
}

/// Exhaustive meeting probability for one hour of page counts.
struct Ratio {
  std::uint64_t num;
  std::uint64_t den;
};

inline std::pair<Ratio, Ratio> meeting_counts(const std::vector<std::uint64_t>& counts,
                                              std::uint64_t x) {
  Ratio pages{0, counts.size()}, requests{0, 0};
  for (auto c : counts) {
    requests.den += c;
    if (c >= x) {
      ++pages.num;
      requests.num += c;
    }
  }
  return {pages, requests};
}

}  // namespace oracle
