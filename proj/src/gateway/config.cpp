#include "presence/gateway/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace presence::gateway {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

void check_readable(const std::optional<std::filesystem::path>& p, const char* what,
                    bool directory = false) {
  if (!p) return;
  namespace fs = std::filesystem;
  const bool ok = directory ? fs::is_directory(*p) : fs::is_regular_file(*p);
  if (!ok || (!directory && !std::ifstream(*p))) {
    fail(ErrorCode::io, std::string(what) + " '" + p->string() + "' is not readable");
  }
}

}  // namespace

ServiceConfig ServiceConfig::from_json_text(const std::string& text,
                                            const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::invalid_argument, "config must be a JSON object");

  ServiceConfig cfg;
  try {
    if (auto it = doc.find("listen"); it != doc.end()) {
      read(*it, "host", cfg.host);
      read(*it, "port", cfg.port);
    }
    read(doc, "decay", cfg.decay);
    if (auto it = doc.find("awareness"); it != doc.end()) {
      read(*it, "top_k", cfg.awareness.top_k);
      read(*it, "theta", cfg.awareness.theta);
      read(*it, "tie_boost", cfg.awareness.tie_boost);
      read(*it, "prune_epsilon", cfg.awareness.prune_epsilon);
    }
    if (auto it = doc.find("visit"); it != doc.end()) {
      read(*it, "r_v", cfg.visit.r_v);
      read(*it, "t_v_min", cfg.visit.t_v_min);
      read(*it, "gap_max", cfg.visit.gap_max);
    }
    if (auto it = doc.find("grid"); it != doc.end()) read(*it, "square_m", cfg.grid_square_m);
    if (auto it = doc.find("region"); it != doc.end()) {
      const auto v = it->get<std::vector<double>>();
      if (v.size() != 4) {
        fail(ErrorCode::invalid_argument, "region must be [lat_min, lon_min, lat_max, lon_max]");
      }
      cfg.region = Region{v[0], v[1], v[2], v[3]};
    }
    if (auto it = doc.find("measures"); it != doc.end()) {
      cfg.measures.clear();
      for (const auto& m : *it) {
        cfg.measures.emplace_back(m.at("name").get<std::string>(), m.at("weight").get<double>());
      }
    }
    read(doc, "shingle_len", cfg.shingle_len);
    read(doc, "strict", cfg.strict);
    if (auto it = doc.find("data"); it != doc.end()) {
      auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
        if (auto jt = it->find(key); jt != it->end() && !jt->is_null()) {
          out = resolve(base_dir, jt->get<std::string>());
        }
      };
      path("locations", cfg.data.locations);
      path("visits", cfg.data.visits);
      path("user_edges", cfg.data.user_edges);
      path("corpus_dir", cfg.data.corpus_dir);
      path("snapshot", cfg.data.snapshot);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("bad config value: ") + e.what());
  }
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return from_json_text(text.str(), path.parent_path());
}

std::optional<std::filesystem::path> ServiceConfig::locate(
    const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return explicit_path;
  if (const char* env = std::getenv("PRESENCED_CONFIG"); env && *env) {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) fail(ErrorCode::invalid_argument, "listen.port out of range");
  (void)decay_spec().normalization();
  awareness.validate();
  visit.validate();
  if (!(grid_square_m > 0.0)) fail(ErrorCode::invalid_argument, "grid.square_m must be positive");
  if (region) region->validate();
  if (shingle_len < 1) fail(ErrorCode::invalid_argument, "shingle_len must be >= 1");
  for (const auto& [name, w] : measures) {
    if (name != "domain" && name != "shingle") {
      fail(ErrorCode::invalid_argument, "unknown measure '" + name + "'");
    }
  }
  (void)WeightVector(measures);
  check_readable(data.locations, "locations file");
  check_readable(data.visits, "visit log");
  check_readable(data.user_edges, "user edge file");
  check_readable(data.corpus_dir, "corpus directory", true);
  check_readable(data.snapshot, "snapshot");
}

}  // namespace presence::gateway
