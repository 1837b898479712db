// presenced: presence service and offline tools.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "presence/analytics.hpp"
#include "presence/gateway/service.hpp"

using namespace presence;
using namespace presence::gateway;

namespace {

ServiceConfig config_from(const std::string& path) {
  auto located = ServiceConfig::locate(path.empty() ? std::nullopt
                                                    : std::optional<std::filesystem::path>(path));
  ServiceConfig cfg = located ? ServiceConfig::load(*located) : ServiceConfig{};
  cfg.validate();
  return cfg;
}

PresenceState state_from(const ServiceConfig& cfg, Epoch now) {
  if (cfg.data.snapshot) {
    PresenceState state = read_snapshot(*cfg.data.snapshot);
    attach_measures(state, cfg);
    return state;
  }
  return load_state(cfg, now);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Presence and awareness service"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config (default: $PRESENCED_CONFIG)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
  std::string host;
  int port = -1;
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  // load-locations
  auto* load_cmd = app.add_subcommand("load-locations", "Validate a locations CSV");
  std::string locations_csv;
  bool strict = false;
  load_cmd->add_option("file", locations_csv)->required();
  load_cmd->add_flag("--strict", strict);

  // replay-track
  auto* replay_cmd = app.add_subcommand("replay-track", "Detect visits in a GPS track");
  std::string track_csv, replay_locations, replay_user = "track", visits_out, report_out,
                                           series_out;
  std::vector<double> r_vs;
  std::vector<Epoch> t_vs;
  Epoch gap_max = -1;
  replay_cmd->add_option("track", track_csv, "CSV epoch_seconds,lat,lon")->required();
  replay_cmd->add_option("--locations", replay_locations, "locations CSV (default: config)");
  replay_cmd->add_option("--user", replay_user);
  replay_cmd->add_option("--r-v", r_vs, "vicinity radii in meters");
  replay_cmd->add_option("--t-v-min", t_vs, "minimum dwell times in seconds");
  replay_cmd->add_option("--gap-max", gap_max);
  replay_cmd->add_option("--visits-out", visits_out, "visit log TSV for the first cell");
  replay_cmd->add_option("--report-out", report_out, "summary CSV (default: stdout)");
  replay_cmd->add_option("--series-out", series_out, "parallel-visit series CSV");

  // analyze-pagecounts
  auto* pages_cmd = app.add_subcommand("analyze-pagecounts", "Hourly page request statistics");
  std::vector<std::string> page_files;
  std::string project = "en", distribution_out, meeting_out;
  std::uint64_t x_max = 30;
  pages_cmd->add_option("files", page_files)->required();
  pages_cmd->add_option("--project", project);
  pages_cmd->add_option("--x-max", x_max)->check(CLI::Range(2, 1 << 20));
  pages_cmd->add_option("--distribution-out", distribution_out);
  pages_cmd->add_option("--meeting-out", meeting_out, "default: stdout");

  // presence
  auto* presence_cmd = app.add_subcommand("presence", "One-off presence query");
  std::string q_user, q_location, q_decay, q_kind = "simple";
  Epoch q_now = 0;
  presence_cmd->add_option("--user", q_user)->required();
  presence_cmd->add_option("--location", q_location)->required();
  presence_cmd->add_option("--decay", q_decay);
  presence_cmd->add_option("--kind", q_kind);
  presence_cmd->add_option("--now", q_now);

  // snapshot / restore
  auto* snapshot_cmd = app.add_subcommand("snapshot", "Write a state archive");
  std::string snapshot_out;
  Epoch s_now = 0;
  snapshot_cmd->add_option("out", snapshot_out)->required();
  snapshot_cmd->add_option("--now", s_now);
  auto* restore_cmd = app.add_subcommand("restore", "Verify an archive and print a summary");
  std::string archive_in, restore_visits_out;
  restore_cmd->add_option("archive", archive_in)->required();
  restore_cmd->add_option("--visits-out", restore_visits_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) {
      ServiceConfig cfg = config_from(config_path);
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      PresenceService service(cfg, state_from(cfg, wall_clock_now()));
      std::cerr << "listening on " << cfg.host << ':' << cfg.port << '\n';
      serve(service, cfg.host, cfg.port);
    } else if (*load_cmd) {
      auto load = load_locations(std::filesystem::path(locations_csv), strict);
      for (const auto& w : load.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "loaded " << load.loaded << " rejected " << load.rejected << '\n';
    } else if (*replay_cmd) {
      const ServiceConfig cfg = config_from(config_path);
      std::filesystem::path loc_path =
          !replay_locations.empty() ? std::filesystem::path(replay_locations)
                                    : cfg.data.locations.value_or(std::filesystem::path{});
      if (loc_path.empty()) fail(ErrorCode::invalid_argument, "no locations file given");
      const auto registry = load_locations(loc_path, cfg.strict).registry;
      std::ifstream track_in(track_csv);
      if (!track_in) fail(ErrorCode::io, "cannot read track '" + track_csv + "'");
      const GeoTrack track = GeoTrack::read_csv(track_in);
      if (r_vs.empty()) r_vs.push_back(cfg.visit.r_v);
      if (t_vs.empty()) t_vs.push_back(cfg.visit.t_v_min);
      const Epoch gap = gap_max >= 0 ? gap_max : cfg.visit.gap_max;
      const TrackReport report = track_report(track, registry, r_vs, t_vs, gap);
      if (!report_out.empty()) {
        auto out = open_out(report_out);
        write_report_csv(out, report);
      } else {
        write_report_csv(std::cout, report);
      }
      if (!series_out.empty()) {
        auto out = open_out(series_out);
        write_parallel_series(out, report);
      }
      if (!visits_out.empty() && !report.cells.empty()) {
        auto out = open_out(visits_out);
        write_visit_log(out, to_visit_log(report.cells.front().visits, UserId(replay_user)));
      }
    } else if (*pages_cmd) {
      std::vector<PageHourRecord> records;
      for (const auto& f : page_files) {
        auto batch = read_pagecount_file(f, project);
        if (batch.malformed > 0) {
          std::cerr << f << ": skipped " << batch.malformed << " malformed lines\n";
        }
        records.insert(records.end(), std::make_move_iterator(batch.records.begin()),
                       std::make_move_iterator(batch.records.end()));
      }
      if (!distribution_out.empty()) {
        auto out = open_out(distribution_out);
        write_distribution_csv(out, visitor_distribution(records));
      }
      std::ofstream file;
      if (!meeting_out.empty()) file = open_out(meeting_out);
      std::ostream& out = meeting_out.empty() ? std::cout : file;
      out << "x,page_weighted,request_weighted\n";
      out.precision(17);
      for (std::uint64_t x = 2; x <= x_max; ++x) {
        const auto p = meeting_probability(records, x);
        out << x << ',' << p.page_weighted << ',' << p.request_weighted << '\n';
      }
    } else if (*presence_cmd) {
      const ServiceConfig cfg = config_from(config_path);
      const Epoch now = presence_cmd->count("--now") ? q_now : wall_clock_now();
      const PresenceState state = state_from(cfg, now);
      const DecaySpec decay = q_decay.empty() ? cfg.decay_spec() : DecaySpec::parse(q_decay);
      std::cout.precision(17);
      std::cout << query_presence(state, UserId(q_user), LocationId(q_location), decay,
                                  parse_presence_kind(q_kind), now)
                << '\n';
    } else if (*snapshot_cmd) {
      const ServiceConfig cfg = config_from(config_path);
      const Epoch now = snapshot_cmd->count("--now") ? s_now : wall_clock_now();
      PresenceService service(cfg, state_from(cfg, now), [now] { return now; });
      auto out = open_out(snapshot_out);
      out << service.snapshot_at(now);
    } else if (*restore_cmd) {
      const PresenceState state = read_snapshot(archive_in);
      std::cout << "locations " << state.registry->locations().size() << '\n'
                << "visit intervals " << state.visits.interval_count() << '\n'
                << "open visits " << state.visits.open_visits().size() << '\n'
                << "users " << state.graph.users().size() << '\n'
                << "presence edges " << state.graph.presence_edge_count() << '\n'
                << "refreshed at " << state.refreshed_at << '\n';
      if (!restore_visits_out.empty()) {
        auto out = open_out(restore_visits_out);
        write_visit_log(out, state.visits);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::invalid_argument ? 2 : 1;
  }
  return 0;
}
