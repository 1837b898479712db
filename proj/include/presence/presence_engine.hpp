#pragma once

#include <vector>

#include "presence/core_model.hpp"
#include "presence/decay.hpp"
#include "presence/similarity.hpp"

namespace presence {

struct PresenceQuery {
  UserId user;
  LocationId location;
  DecaySpec decay;
  Epoch now;
};

/// Piecewise-constant closeness weight over age (minutes). `breakpoints`
/// is ascending with one more entry than `weights`; ages outside the
/// covered range carry weight 0.
struct WeightedTimeline {
  std::vector<double> breakpoints;
  std::vector<double> weights;

  bool empty() const noexcept { return weights.empty(); }
  double weight_at(double age) const;
  double integrate(const DecaySpec& decay) const;
};

/// Decay-weighted visit time in weighted minutes.
double decayed_visit_time(const VisitLog& log, const LocationRegistry& registry,
                          const PresenceQuery& q);

/// Decayed visit time normalized by the decay's total area; in [0,1].
double presence(const VisitLog& log, const LocationRegistry& registry, const PresenceQuery& q);

/// Presence extended by closeness-weighted time at every location. Requires
/// that the user's visits never overlap across locations.
double cumulative_presence_single(const VisitLog& log, const LocationRegistry& registry,
                                  const PresenceQuery& q, const SimilarityTable& closeness);

/// Per-instant maximum of closeness over all locations visited at that
/// instant (the queried location counts with closeness 1), integrated
/// against the decay and normalized. Overlapping visits are allowed and
/// never counted twice.
double cumulative_presence_multi(const VisitLog& log, const LocationRegistry& registry,
                                 const PresenceQuery& q, const SimilarityTable& closeness);

/// The per-instant max weight used by cumulative_presence_multi().
WeightedTimeline closeness_timeline(const VisitLog& log, const PresenceQuery& q,
                                    const SimilarityTable& closeness);

}  // namespace presence
