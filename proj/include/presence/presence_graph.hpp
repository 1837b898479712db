#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "presence/core_model.hpp"
#include "presence/decay.hpp"
#include "presence/similarity.hpp"

namespace presence {

struct AwarenessParams {
  std::size_t top_k = 10;
  double theta = 0.0;
  double tie_boost = 0.0;
  double prune_epsilon = 1e-4;

  void validate() const;
};

struct AwarenessEntry {
  UserId user;
  double score;
  // Why the user was suggested: the location that produced the score,
  // its closeness to the queried location, and the user's presence there.
  LocationId via;
  double closeness;
  double presence;

  friend bool operator==(const AwarenessEntry&, const AwarenessEntry&) = default;
};

using AwarenessResult = std::vector<AwarenessEntry>;

/// Users and locations joined by three typed edge classes: user-user ties,
/// location-location closeness, and user-location presence. Each class has
/// its own store keyed by endpoint types, so the classes cannot mix.
class PresenceGraph {
 public:
  PresenceGraph() = default;
  explicit PresenceGraph(SimilarityTable location_edges)
      : location_edges_(std::move(location_edges)) {}

  void add_user(const UserId& user) { users_.insert(user); }
  void add_location(const LocationId& location) { locations_.insert(location); }

  void set_user_edge(const UserId& a, const UserId& b, double weight);
  double user_edge(const UserId& a, const UserId& b) const;
  const std::map<std::pair<UserId, UserId>, double>& user_edges() const noexcept {
    return user_edges_;
  }

  double location_edge(const LocationId& a, const LocationId& b) const {
    return location_edges_.get(a, b);
  }
  const SimilarityTable& location_edges() const noexcept { return location_edges_; }
  SimilarityTable& location_edges() noexcept { return location_edges_; }

  void set_presence_edge(const UserId& user, const LocationId& location, double weight);
  double presence_edge(const UserId& user, const LocationId& location) const;
  void clear_presence_edges();

  const std::map<UserId, double>& present_at(const LocationId& location) const;
  const std::map<LocationId, double>& presence_of(const UserId& user) const;
  std::size_t presence_edge_count() const noexcept;

  const std::set<UserId>& users() const noexcept { return users_; }
  const std::set<LocationId>& locations() const noexcept { return locations_; }
  bool has_location(const LocationId& location) const { return locations_.count(location) != 0; }

 private:
  std::set<UserId> users_;
  std::set<LocationId> locations_;
  std::map<std::pair<UserId, UserId>, double> user_edges_;
  SimilarityTable location_edges_;
  std::map<LocationId, std::map<UserId, double>> by_location_;
  std::map<UserId, std::map<LocationId, double>> by_user_;
};

/// Recomputes every presence edge as the multi-location cumulative presence
/// at `now`, dropping edges below `prune_epsilon`. Pairs are evaluated in
/// parallel.
PresenceGraph refresh_presence_edges(const PresenceGraph& graph, const VisitLog& log,
                                     const LocationRegistry& registry, const DecaySpec& decay,
                                     Epoch now, double prune_epsilon = 1e-4);

/// Users with a presence edge to `at`, strongest first; ties by user id.
AwarenessResult co_located_ranked(const PresenceGraph& graph, const LocationId& at,
                                  const UserId& requester);

/// One-hop awareness: each candidate scores the best closeness-weighted
/// presence over their locations, optionally boosted by a social tie.
AwarenessResult extended_awareness(const PresenceGraph& graph, const LocationId& at,
                                   const UserId& requester, const AwarenessParams& params);

namespace reference {

// Serial refresh kept as the reference for the parallel kernel.
PresenceGraph refresh_presence_edges(const PresenceGraph& graph, const VisitLog& log,
                                     const LocationRegistry& registry, const DecaySpec& decay,
                                     Epoch now, double prune_epsilon = 1e-4);

}  // namespace reference

}  // namespace presence
