#include "presence/presence_engine.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace presence {

namespace {

void check_now(const VisitLog& log, const PresenceQuery& q) {
  if (log.latest_end(q.user) > q.now) {
    fail(ErrorCode::precondition, "user '" + q.user.str() +
                                      "' has visits ending after the evaluation time " +
                                      std::to_string(q.now));
  }
}

double integrate_intervals(std::span<const VisitInterval> intervals, const DecaySpec& decay,
                           Epoch now) {
  double sum = 0.0;
  for (const auto& v : intervals) {
    const auto [lo, hi] = age_range(v, now);
    sum += decay.integrate(lo, hi);
  }
  return sum;
}

double normalized(double weighted_minutes, const DecaySpec& decay) {
  return std::clamp(weighted_minutes / decay.normalization(), 0.0, 1.0);
}

}  // namespace

double WeightedTimeline::weight_at(double age) const {
  if (weights.empty() || age < breakpoints.front() || age > breakpoints.back()) return 0.0;
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), age);
  const auto idx = static_cast<std::size_t>(std::distance(breakpoints.begin(), it));
  return weights[std::min(idx, weights.size()) - 1];
}

double WeightedTimeline::integrate(const DecaySpec& decay) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    sum += weights[i] * decay.integrate(breakpoints[i], breakpoints[i + 1]);
  }
  return sum;
}

double decayed_visit_time(const VisitLog& log, const LocationRegistry& registry,
                          const PresenceQuery& q) {
  registry.require(q.location);
  check_now(log, q);
  return integrate_intervals(log.intervals(q.user, q.location), q.decay, q.now);
}

double presence(const VisitLog& log, const LocationRegistry& registry, const PresenceQuery& q) {
  const double normalization = q.decay.normalization();
  return std::clamp(decayed_visit_time(log, registry, q) / normalization, 0.0, 1.0);
}

double cumulative_presence_single(const VisitLog& log, const LocationRegistry& registry,
                                  const PresenceQuery& q, const SimilarityTable& closeness) {
  registry.require(q.location);
  check_now(log, q);
  const auto visits = log.visits_of(q.user);

  std::vector<VisitInterval> all;
  for (const auto& [loc, list] : visits) all.insert(all.end(), list.begin(), list.end());
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].start < all[i - 1].end) {
      fail(ErrorCode::precondition,
           "user '" + q.user.str() +
               "' has overlapping visits at different locations; use the multi-location form");
    }
  }

  double sum = 0.0;
  for (const auto& [loc, list] : visits) {
    const double c = closeness.get(q.location, loc);
    if (c == 0.0) continue;
    sum += c * integrate_intervals(list, q.decay, q.now);
  }
  return normalized(sum, q.decay);
}

WeightedTimeline closeness_timeline(const VisitLog& log, const PresenceQuery& q,
                                    const SimilarityTable& closeness) {
  struct Edge {
    Epoch time;
    double weight;
    bool opening;
  };
  std::vector<Edge> edges;
  for (const auto& [loc, list] : log.visits_of(q.user)) {
    const double c = closeness.get(q.location, loc);
    if (c <= 0.0) continue;
    for (const auto& v : list) {
      if (v.start == v.end) continue;
      edges.push_back({v.start, c, true});
      edges.push_back({v.end, c, false});
    }
  }
  WeightedTimeline timeline;
  if (edges.empty()) return timeline;
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.time < b.time; });

  // Sweep forward in time over elementary segments; the active multiset
  // gives the max closeness of each segment.
  std::multiset<double> active;
  std::vector<std::pair<Epoch, double>> segments;  // (segment start, weight)
  std::size_t i = 0;
  while (i < edges.size()) {
    const Epoch t = edges[i].time;
    for (; i < edges.size() && edges[i].time == t; ++i) {
      if (edges[i].opening) {
        active.insert(edges[i].weight);
      } else {
        active.erase(active.find(edges[i].weight));
      }
    }
    const double w = active.empty() ? 0.0 : *active.rbegin();
    if (segments.empty() || segments.back().second != w) segments.emplace_back(t, w);
  }
  // The last segment opens at the final edge with weight 0 and closes the range.
  const Epoch last = segments.back().first;

  // Convert to ascending ages: the most recent segment comes first.
  timeline.breakpoints.push_back(static_cast<double>(q.now - last) / 60.0);
  for (std::size_t k = segments.size() - 1; k-- > 0;) {
    timeline.weights.push_back(segments[k].second);
    timeline.breakpoints.push_back(static_cast<double>(q.now - segments[k].first) / 60.0);
  }
  return timeline;
}

double cumulative_presence_multi(const VisitLog& log, const LocationRegistry& registry,
                                 const PresenceQuery& q, const SimilarityTable& closeness) {
  registry.require(q.location);
  check_now(log, q);
  return normalized(closeness_timeline(log, q, closeness).integrate(q.decay), q.decay);
}

}  // namespace presence
