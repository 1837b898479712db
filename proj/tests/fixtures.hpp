#pragma once

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "presence/core_model.hpp"
#include "presence/decay.hpp"
#include "presence/similarity.hpp"

namespace fixtures {

using namespace presence;

inline DecaySpec to_spec(const oracle::Decay& d) {
  switch (d.kind) {
    case oracle::DecayKind::exponential: return DecaySpec::exponential(d.p);
    case oracle::DecayKind::linear: return DecaySpec::linear(d.p);
    case oracle::DecayKind::window: return DecaySpec::window(d.p);
  }
  return DecaySpec::window(1);
}

inline oracle::Decay random_decay(std::mt19937_64& rng, oracle::DecayKind kind) {
  switch (kind) {
    case oracle::DecayKind::exponential:
      return {kind, std::uniform_real_distribution<double>(0.01, 0.2)(rng)};
    case oracle::DecayKind::linear:
      return {kind, static_cast<double>(std::uniform_int_distribution<int>(10, 240)(rng))};
    case oracle::DecayKind::window:
      return {kind, static_cast<double>(std::uniform_int_distribution<int>(5, 240)(rng))};
  }
  return {kind, 1.0};
}

/// A user's visits to `locations` locations; location 0 is the queried one.
struct RandomCase {
  LocationRegistry registry;
  VisitLog log;
  SimilarityTable closeness;
  std::vector<double> closeness_of;             // per location, [0] == 1
  std::vector<std::vector<oracle::Span>> spans;  // per location
  Epoch now = 0;
  UserId user{"u"};

  LocationId location(std::size_t i) const { return LocationId("L" + std::to_string(i)); }

  std::vector<oracle::Track> tracks(bool only_queried, bool unit_closeness = false) const {
    std::vector<oracle::Track> out;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (only_queried && i != 0) continue;
      out.push_back({unit_closeness ? 1.0 : closeness_of[i], spans[i]});
    }
    return out;
  }
};

/// Up to `max_intervals` second-aligned visits within `span` seconds before
/// now. Disjoint cases never overlap across locations; the others overlap
/// freely.
inline RandomCase random_case(std::mt19937_64& rng, bool disjoint, int max_intervals = 20,
                              Epoch span = 4 * 3600, std::size_t locations = 5,
                              bool zero_cross = false) {
  RandomCase c;
  c.now = 1'700'000'000 + static_cast<Epoch>(rng() % 100000);
  c.spans.resize(locations);
  for (std::size_t i = 0; i < locations; ++i) {
    const auto id = c.location(i);
    c.registry.add(VirtualLocation(id, {VirtualCoordinate("https://" + id.str() + ".example/")}));
    const double w = i == 0 ? 1.0
                     : zero_cross
                         ? 0.0
                         : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    c.closeness_of.push_back(w);
    if (i > 0) c.closeness.set(c.location(0), id, w);
  }
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_intervals));
  std::uniform_int_distribution<Epoch> when(c.now - span, c.now);
  std::uniform_int_distribution<std::size_t> where(0, locations - 1);
  if (disjoint) {
    std::vector<Epoch> points;
    while (points.size() < static_cast<std::size_t>(2 * n)) {
      const Epoch t = when(rng);
      if (std::find(points.begin(), points.end(), t) == points.end()) points.push_back(t);
    }
    std::sort(points.begin(), points.end());
    for (int k = 0; k < n; ++k) {
      const std::size_t i = where(rng);
      c.spans[i].push_back({points[2 * k], points[2 * k + 1]});
    }
  } else {
    std::uniform_int_distribution<Epoch> len(1, 3600);
    for (int k = 0; k < n; ++k) {
      const Epoch s = when(rng);
      const Epoch e = std::min(c.now, s + len(rng));
      c.spans[where(rng)].push_back({s, e});
    }
  }
  for (std::size_t i = 0; i < locations; ++i) {
    for (const auto& s : c.spans[i]) {
      add_visit(c.log, c.registry, c.user, c.location(i), VisitInterval::make(s.start, s.end), c.now);
    }
  }
  return c;
}

inline bool close_rel(double got, double want, double rel, double abs_floor = 1e-12) {
  return std::abs(got - want) <= rel * std::abs(want) + abs_floor;
}

}  // namespace fixtures
