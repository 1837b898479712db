#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "presence/core_model.hpp"

namespace presence {

/// A normalized, symmetric similarity between two locations. Measures must
/// return 1 for a location compared with itself; results are clamped to
/// [0,1] by d_web().
struct SimilarityMeasure {
  std::string name;
  std::function<double(const VirtualLocation&, const VirtualLocation&)> evaluate;
};

/// Per-measure weights; entries are non-negative and sum to 1 (within 1e-9).
class WeightVector {
 public:
  explicit WeightVector(std::vector<std::pair<std::string, double>> weights);

  /// Scales arbitrary non-negative weights so they sum to 1.
  static WeightVector normalized(std::vector<std::pair<std::string, double>> weights);

  const std::vector<std::pair<std::string, double>>& entries() const noexcept { return weights_; }

 private:
  std::vector<std::pair<std::string, double>> weights_;
};

/// Weighted average of the measures' similarities: 1 = identical. Used as a
/// closeness multiplier, never inverted into a distance.
double d_web(const LocationRegistry& registry, const LocationId& a, const LocationId& b,
             std::span<const SimilarityMeasure> measures, const WeightVector& weights);

/// Lowercased word tokens split on non-alphanumeric code points. Input is
/// UTF-8; case folding covers ASCII, Latin-1, Greek and Cyrillic.
std::vector<std::string> tokenize(std::string_view utf8);

/// Jaccard overlap of the two streams' contiguous token shingles. A stream
/// shorter than `shingle_len` forms a single shingle of all its tokens.
double shingle_jaccard(std::span<const std::string> a, std::span<const std::string> b,
                       std::size_t shingle_len);

/// Registrable domain of a host: the last two labels, or three when the
/// second-level label is a generic one under a two-letter country code
/// (co.uk, com.au, ...). IP literals are returned unchanged.
std::string registrable_domain(std::string_view host);

/// 1 when the locations share a registrable domain, else 0.
double domain_equality(const VirtualLocation& a, const VirtualLocation& b);

/// Token streams per location, typically loaded from `<location_id>.txt`.
class LocationCorpus {
 public:
  void set(const LocationId& id, std::string_view text);
  const std::vector<std::string>* tokens(const LocationId& id) const;
  std::size_t size() const noexcept { return tokens_.size(); }

  static LocationCorpus load_directory(const std::filesystem::path& dir);

 private:
  std::map<LocationId, std::vector<std::string>> tokens_;
};

SimilarityMeasure shingle_measure(std::shared_ptr<const LocationCorpus> corpus,
                                  std::size_t shingle_len = 3);
SimilarityMeasure domain_measure();

/// Symmetric closeness table between locations (the location edges of the
/// presence graph). Explicit entries take precedence; otherwise an optional
/// provider is evaluated once per pair and cached. Unknown pairs are 0 and
/// every location is 1 to itself. Safe for concurrent readers.
class SimilarityTable {
 public:
  using Provider = std::function<double(const LocationId&, const LocationId&)>;
  using Pair = std::pair<LocationId, LocationId>;

  SimilarityTable() = default;
  explicit SimilarityTable(Provider provider) : provider_(std::move(provider)) {}
  SimilarityTable(const SimilarityTable& other);
  SimilarityTable& operator=(const SimilarityTable& other);

  static SimilarityTable from_measures(std::shared_ptr<const LocationRegistry> registry,
                                       std::vector<SimilarityMeasure> measures,
                                       WeightVector weights);

  void set(const LocationId& a, const LocationId& b, double closeness);
  double get(const LocationId& a, const LocationId& b) const;

  /// Explicit and cached pairs, keyed with the smaller id first.
  std::map<Pair, double> entries() const;
  bool has_provider() const noexcept { return static_cast<bool>(provider_); }

 private:
  static Pair key(const LocationId& a, const LocationId& b);

  Provider provider_;
  mutable std::shared_mutex mutex_;
  std::map<Pair, double> explicit_;
  mutable std::map<Pair, double> cache_;
};

}  // namespace presence
