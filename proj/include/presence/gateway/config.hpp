#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "presence/decay.hpp"
#include "presence/geo.hpp"
#include "presence/presence_graph.hpp"

namespace presence::gateway {

/// Service configuration, read from a JSON file. Dotted key names map onto
/// nested objects, e.g. `awareness.top_k` is {"awareness": {"top_k": ...}}.
/// Relative data paths resolve against the config file's directory.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string decay = "exp:0.05";
  AwarenessParams awareness;
  VisitParams visit;
  double grid_square_m = 100.0;
  std::optional<Region> region;
  std::vector<std::pair<std::string, double>> measures = {{"domain", 1.0}};
  std::size_t shingle_len = 3;
  bool strict = false;

  struct DataFiles {
    std::optional<std::filesystem::path> locations;
    std::optional<std::filesystem::path> visits;
    std::optional<std::filesystem::path> user_edges;
    std::optional<std::filesystem::path> corpus_dir;
    std::optional<std::filesystem::path> snapshot;
  } data;

  static ServiceConfig from_json_text(const std::string& text,
                                      const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);

  /// Explicit path if given, else $PRESENCED_CONFIG, else nothing.
  static std::optional<std::filesystem::path> locate(
      const std::optional<std::filesystem::path>& explicit_path);

  DecaySpec decay_spec() const { return DecaySpec::parse(decay); }

  /// Checks parameter ranges, the decay string, and that every referenced
  /// input file is readable.
  void validate() const;
};

}  // namespace presence::gateway
