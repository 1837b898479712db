#include "presence/presence_graph.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "presence/presence_engine.hpp"

namespace presence {

void AwarenessParams::validate() const {
  if (top_k < 1) fail(ErrorCode::invalid_argument, "top_k must be >= 1");
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorCode::invalid_argument, "theta must be in [0,1]");
  if (!(tie_boost >= 0.0) || !std::isfinite(tie_boost)) {
    fail(ErrorCode::invalid_argument, "tie_boost must be non-negative");
  }
  if (!(prune_epsilon >= 0.0 && prune_epsilon <= 1.0)) {
    fail(ErrorCode::invalid_argument, "prune_epsilon must be in [0,1]");
  }
}

namespace {

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) fail(ErrorCode::invalid_argument, "edge weight outside [0,1]");
}

const std::map<UserId, double> kNoUsers;
const std::map<LocationId, double> kNoLocations;

struct Pair {
  const UserId* user;
  const LocationId* location;
};

// Graph with every vertex of the log added and presence edges cleared.
PresenceGraph prepared(const PresenceGraph& graph, const VisitLog& log, Epoch now) {
  PresenceGraph out = graph;
  out.clear_presence_edges();
  for (const auto& user : log.users()) {
    if (log.latest_end(user) > now) {
      fail(ErrorCode::precondition,
           "user '" + user.str() + "' has visits ending after the refresh time");
    }
    out.add_user(user);
    for (const auto& [loc, list] : log.visits_of(user)) out.add_location(loc);
  }
  return out;
}

std::vector<Pair> candidate_pairs(const PresenceGraph& g, const VisitLog& log) {
  std::vector<Pair> pairs;
  for (const auto& user : g.users()) {
    if (log.visits_of(user).empty()) continue;
    for (const auto& loc : g.locations()) pairs.push_back({&user, &loc});
  }
  return pairs;
}

void store(PresenceGraph& g, const std::vector<Pair>& pairs, const std::vector<double>& weights,
           double prune_epsilon) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (weights[i] >= prune_epsilon && weights[i] > 0.0) {
      g.set_presence_edge(*pairs[i].user, *pairs[i].location, weights[i]);
    }
  }
}

}  // namespace

void PresenceGraph::set_user_edge(const UserId& a, const UserId& b, double weight) {
  check_weight(weight);
  if (a == b) fail(ErrorCode::invalid_argument, "user tie needs two distinct users");
  users_.insert(a);
  users_.insert(b);
  user_edges_.insert_or_assign(a < b ? std::pair{a, b} : std::pair{b, a}, weight);
}

double PresenceGraph::user_edge(const UserId& a, const UserId& b) const {
  auto it = user_edges_.find(a < b ? std::pair{a, b} : std::pair{b, a});
  return it == user_edges_.end() ? 0.0 : it->second;
}

void PresenceGraph::set_presence_edge(const UserId& user, const LocationId& location,
                                      double weight) {
  check_weight(weight);
  users_.insert(user);
  locations_.insert(location);
  by_location_[location].insert_or_assign(user, weight);
  by_user_[user].insert_or_assign(location, weight);
}

double PresenceGraph::presence_edge(const UserId& user, const LocationId& location) const {
  auto it = by_user_.find(user);
  if (it == by_user_.end()) return 0.0;
  auto jt = it->second.find(location);
  return jt == it->second.end() ? 0.0 : jt->second;
}

void PresenceGraph::clear_presence_edges() {
  by_location_.clear();
  by_user_.clear();
}

const std::map<UserId, double>& PresenceGraph::present_at(const LocationId& location) const {
  auto it = by_location_.find(location);
  return it == by_location_.end() ? kNoUsers : it->second;
}

const std::map<LocationId, double>& PresenceGraph::presence_of(const UserId& user) const {
  auto it = by_user_.find(user);
  return it == by_user_.end() ? kNoLocations : it->second;
}

std::size_t PresenceGraph::presence_edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [user, edges] : by_user_) n += edges.size();
  return n;
}

PresenceGraph refresh_presence_edges(const PresenceGraph& graph, const VisitLog& log,
                                     const LocationRegistry& registry, const DecaySpec& decay,
                                     Epoch now, double prune_epsilon) {
  (void)decay.normalization();  // reject divergent decays before fanning out
  PresenceGraph out = prepared(graph, log, now);
  const auto pairs = candidate_pairs(out, log);
  std::vector<double> weights(pairs.size(), 0.0);
  const auto& closeness = out.location_edges();
  std::exception_ptr error;

  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& p = pairs[static_cast<std::size_t>(i)];
      weights[static_cast<std::size_t>(i)] = cumulative_presence_multi(
          log, registry, PresenceQuery{*p.user, *p.location, decay, now}, closeness);
    } catch (...) {
#pragma omp critical(refresh_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  store(out, pairs, weights, prune_epsilon);
  return out;
}

namespace reference {

PresenceGraph refresh_presence_edges(const PresenceGraph& graph, const VisitLog& log,
                                     const LocationRegistry& registry, const DecaySpec& decay,
                                     Epoch now, double prune_epsilon) {
  PresenceGraph out = prepared(graph, log, now);
  const auto pairs = candidate_pairs(out, log);
  std::vector<double> weights;
  weights.reserve(pairs.size());
  for (const auto& p : pairs) {
    weights.push_back(cumulative_presence_multi(
        log, registry, PresenceQuery{*p.user, *p.location, decay, now}, out.location_edges()));
  }
  store(out, pairs, weights, prune_epsilon);
  return out;
}

}  // namespace reference

namespace {

void sort_ranked(AwarenessResult& result) {
  std::sort(result.begin(), result.end(), [](const AwarenessEntry& a, const AwarenessEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.user < b.user;
  });
}

}  // namespace

AwarenessResult co_located_ranked(const PresenceGraph& graph, const LocationId& at,
                                  const UserId& requester) {
  if (!graph.has_location(at)) fail(ErrorCode::not_found, "unknown location '" + at.str() + "'");
  AwarenessResult result;
  for (const auto& [user, weight] : graph.present_at(at)) {
    if (user == requester) continue;
    result.push_back({user, weight, at, 1.0, weight});
  }
  sort_ranked(result);
  return result;
}

AwarenessResult extended_awareness(const PresenceGraph& graph, const LocationId& at,
                                   const UserId& requester, const AwarenessParams& params) {
  params.validate();
  if (!graph.has_location(at)) fail(ErrorCode::not_found, "unknown location '" + at.str() + "'");
  AwarenessResult result;
  for (const auto& user : graph.users()) {
    if (user == requester) continue;
    const auto& edges = graph.presence_of(user);
    if (edges.empty()) continue;
    std::optional<AwarenessEntry> best;
    for (const auto& [loc, weight] : edges) {
      const double c = graph.location_edge(at, loc);
      const double s = c * weight;
      if (!best || s > best->score) best = AwarenessEntry{user, s, loc, c, weight};
    }
    if (params.tie_boost > 0.0) {
      best->score =
          std::min(1.0, best->score * (1.0 + params.tie_boost * graph.user_edge(requester, user)));
    }
    if (best->score >= params.theta) result.push_back(*best);
  }
  sort_ranked(result);
  if (result.size() > params.top_k) result.erase(result.begin() + params.top_k, result.end());
  return result;
}

}  // namespace presence
