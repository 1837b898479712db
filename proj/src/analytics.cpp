#include "presence/analytics.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <regex>
#include <unordered_map>

#include "presence/text_util.hpp"

namespace presence {

namespace {

class BatchBuilder {
 public:
  BatchBuilder(std::string_view filter, std::string hour) : filter_(filter), hour_(std::move(hour)) {}

  void line(std::string_view raw) {
    const auto row = trim(raw);
    if (row.empty()) return;
    std::string_view fields[4];
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < row.size()) {
      auto end = row.find(' ', pos);
      if (end == std::string_view::npos) end = row.size();
      if (end > pos) {
        if (n == 4) {
          ++batch_.malformed;
          return;
        }
        fields[n++] = row.substr(pos, end - pos);
      }
      pos = end + 1;
    }
    const auto count = n == 4 ? parse_int<std::uint64_t>(fields[2]) : std::nullopt;
    const auto bytes = n == 4 ? parse_int<std::uint64_t>(fields[3]) : std::nullopt;
    if (!count || !bytes || *count == 0) {
      ++batch_.malformed;
      return;
    }
    if (fields[0] != filter_) {
      ++batch_.filtered;
      return;
    }
    std::string page(fields[1]);
    if (auto it = index_.find(page); it != index_.end()) {
      batch_.records[it->second].requests += *count;
      return;
    }
    index_.emplace(page, batch_.records.size());
    batch_.records.push_back({std::string(fields[0]), std::move(page), hour_, *count});
  }

  PagecountBatch finish() { return std::move(batch_); }

 private:
  std::string_view filter_;
  std::string hour_;
  PagecountBatch batch_;
  std::unordered_map<std::string, std::size_t> index_;
};

void summarize(TrackCell& cell, const std::vector<Epoch>& timestamps) {
  std::vector<std::int64_t> delta(timestamps.size() + 1, 0);
  std::vector<const LocationId*> seen;
  for (const auto& v : cell.visits) {
    cell.accumulated_seconds += v.interval.length();
    if (seen.empty() || *seen.back() != v.location) seen.push_back(&v.location);
    const auto first = std::lower_bound(timestamps.begin(), timestamps.end(), v.interval.start);
    const auto last = std::upper_bound(timestamps.begin(), timestamps.end(), v.interval.end);
    ++delta[static_cast<std::size_t>(first - timestamps.begin())];
    --delta[static_cast<std::size_t>(last - timestamps.begin())];
  }
  cell.parallel_visits.resize(timestamps.size());
  std::int64_t running = 0;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    running += delta[i];
    cell.parallel_visits[i] = static_cast<std::uint32_t>(running);
  }
  cell.visit_count = cell.visits.size();
  cell.visited_locations = seen.size();
  if (cell.visit_count > 0) {
    cell.avg_duration_seconds =
        static_cast<double>(cell.accumulated_seconds) / static_cast<double>(cell.visit_count);
    cell.avg_visits =
        static_cast<double>(cell.visit_count) / static_cast<double>(cell.visited_locations);
  }
}

std::vector<VisitParams> parameter_grid(std::span<const double> r_v, std::span<const Epoch> t_v_min,
                                        Epoch gap_max) {
  if (r_v.empty() || t_v_min.empty()) {
    fail(ErrorCode::invalid_argument, "track report needs at least one r_v and one t_v_min");
  }
  std::vector<VisitParams> grid;
  for (double r : r_v) {
    for (Epoch t : t_v_min) {
      VisitParams p{r, t, gap_max};
      p.validate();
      grid.push_back(p);
    }
  }
  return grid;
}

void check_track_inputs(const GeoTrack& track, const LocationRegistry& registry) {
  if (track.empty()) fail(ErrorCode::invalid_argument, "track is empty");
  if (registry.empty()) fail(ErrorCode::invalid_argument, "registry is empty");
}

std::vector<Epoch> timestamps_of(const GeoTrack& track) {
  std::vector<Epoch> out;
  out.reserve(track.size());
  for (const auto& r : track.readings()) out.push_back(r.time);
  return out;
}

}  // namespace

PagecountBatch ingest_pagecounts(std::istream& in, std::string_view project_filter,
                                 const std::string& hour) {
  if (!in) fail(ErrorCode::io, "pagecount stream is unreadable");
  BatchBuilder builder(project_filter, hour);
  std::string line;
  while (std::getline(in, line)) builder.line(line);
  if (in.bad()) fail(ErrorCode::io, "error while reading pagecount stream");
  return builder.finish();
}

PagecountBatch read_pagecount_file(const std::filesystem::path& path,
                                   std::string_view project_filter) {
  // gzopen reads uncompressed files transparently.
  gzFile file = gzopen(path.c_str(), "rb");
  if (!file) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
  BatchBuilder builder(project_filter, hour_from_filename(path.filename().string()));
  std::string pending;
  std::vector<char> buffer(1 << 16);
  int n = 0;
  while ((n = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()))) > 0) {
    pending.append(buffer.data(), static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n', start)) {
      builder.line(std::string_view(pending).substr(start, nl - start));
      start = nl + 1;
    }
    pending.erase(0, start);
  }
  int errnum = Z_OK;
  const char* message = gzerror(file, &errnum);
  const bool failed = n < 0 || (errnum != Z_OK && errnum != Z_STREAM_END);
  const std::string why = failed ? message : "";
  gzclose(file);
  if (failed) fail(ErrorCode::io, "error reading '" + path.string() + "': " + why);
  if (!pending.empty()) builder.line(pending);
  return builder.finish();
}

std::string hour_from_filename(std::string_view filename) {
  static const std::regex re(R"(pagecounts-(\d{4})(\d{2})(\d{2})-(\d{2})\d{4})");
  std::cmatch m;
  if (std::regex_search(filename.begin(), filename.end(), m, re)) {
    return m[1].str() + "-" + m[2].str() + "-" + m[3].str() + "T" + m[4].str();
  }
  return std::filesystem::path(filename).stem().string();
}

std::map<std::uint64_t, std::size_t> visitor_distribution(std::span<const PageHourRecord> records) {
  if (records.empty()) fail(ErrorCode::invalid_argument, "no pagecount records");
  std::map<std::uint64_t, std::size_t> histogram;
  for (const auto& r : records) ++histogram[r.requests];
  return histogram;
}

MeetingProbability meeting_probability(std::span<const PageHourRecord> records, std::uint64_t x) {
  if (x < 2) fail(ErrorCode::invalid_argument, "meeting threshold x must be >= 2");
  if (records.empty()) fail(ErrorCode::invalid_argument, "no pagecount records for the hour");
  struct Tally {
    std::size_t pages = 0;
    std::size_t qualifying_pages = 0;
    std::uint64_t requests = 0;
    std::uint64_t qualifying_requests = 0;
  };
  std::map<std::string, Tally> hours;
  for (const auto& r : records) {
    auto& t = hours[r.hour];
    ++t.pages;
    t.requests += r.requests;
    if (r.requests >= x) {
      ++t.qualifying_pages;
      t.qualifying_requests += r.requests;
    }
  }
  MeetingProbability mean{0.0, 0.0};
  for (const auto& [hour, t] : hours) {
    mean.page_weighted += static_cast<double>(t.qualifying_pages) / static_cast<double>(t.pages);
    mean.request_weighted +=
        static_cast<double>(t.qualifying_requests) / static_cast<double>(t.requests);
  }
  mean.page_weighted /= static_cast<double>(hours.size());
  mean.request_weighted /= static_cast<double>(hours.size());
  return mean;
}

const TrackCell& TrackReport::cell(double r_v, Epoch t_v_min) const {
  for (const auto& c : cells) {
    if (c.r_v == r_v && c.t_v_min == t_v_min) return c;
  }
  fail(ErrorCode::not_found, "no report cell for the requested parameters");
}

TrackReport track_report(const GeoTrack& track, const LocationRegistry& registry,
                         std::span<const double> r_v, std::span<const Epoch> t_v_min,
                         Epoch gap_max) {
  const auto grid = parameter_grid(r_v, t_v_min, gap_max);
  check_track_inputs(track, registry);
  const auto bound = registry.bound();
  const auto readings = track.readings();

  // runs[cell][location]; distances are computed once per location and
  // shared by every parameter cell.
  std::vector<std::vector<std::vector<VisitInterval>>> runs(
      grid.size(), std::vector<std::vector<VisitInterval>>(bound.size()));
  const auto n = static_cast<std::ptrdiff_t>(bound.size());
#pragma omp parallel
  {
    std::vector<double> distances(readings.size());
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(i);
      for (std::size_t k = 0; k < readings.size(); ++k) {
        distances[k] = haversine(readings[k].point, *bound[l]->point);
      }
      for (std::size_t c = 0; c < grid.size(); ++c) runs[c][l] = dwell_runs(readings, distances, grid[c]);
    }
  }

  TrackReport report;
  report.timestamps = timestamps_of(track);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    TrackCell cell{grid[c].r_v, grid[c].t_v_min, {}, {}};
    for (std::size_t l = 0; l < bound.size(); ++l) {
      for (const auto& v : runs[c][l]) cell.visits.push_back({bound[l]->id, v});
    }
    summarize(cell, report.timestamps);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

namespace reference {

TrackReport track_report(const GeoTrack& track, const LocationRegistry& registry,
                         std::span<const double> r_v, std::span<const Epoch> t_v_min,
                         Epoch gap_max) {
  const auto grid = parameter_grid(r_v, t_v_min, gap_max);
  check_track_inputs(track, registry);
  TrackReport report;
  report.timestamps = timestamps_of(track);
  for (const auto& params : grid) {
    TrackCell cell{params.r_v, params.t_v_min, reference::detect_visits(track, registry, params),
                   {}};
    summarize(cell, report.timestamps);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace reference

std::string format_mmss(double seconds) {
  const auto total = static_cast<long long>(std::llround(std::max(0.0, seconds)));
  const long long minutes = total / 60;
  const long long rest = total % 60;
  std::string out;
  if (minutes < 10) out += '0';
  out += std::to_string(minutes);
  out += ':';
  if (rest < 10) out += '0';
  out += std::to_string(rest);
  return out;
}

void write_report_csv(std::ostream& out, const TrackReport& report) {
  out << "r_v,t_v_min,accum_seconds,n_locations,n_visits,avg_duration_s,avg_duration_mmss,"
         "avg_visits\n";
  for (const auto& c : report.cells) {
    out << c.r_v << ',' << c.t_v_min << ',' << c.accumulated_seconds << ',' << c.visited_locations
        << ',' << c.visit_count << ',' << c.avg_duration_seconds << ','
        << format_mmss(c.avg_duration_seconds) << ',' << c.avg_visits << '\n';
  }
}

void write_parallel_series(std::ostream& out, const TrackReport& report) {
  out << "r_v,t_v_min,epoch_seconds,parallel_visits\n";
  for (const auto& c : report.cells) {
    for (std::size_t i = 0; i < report.timestamps.size(); ++i) {
      out << c.r_v << ',' << c.t_v_min << ',' << report.timestamps[i] << ','
          << c.parallel_visits[i] << '\n';
    }
  }
}

void write_distribution_csv(std::ostream& out,
                            const std::map<std::uint64_t, std::size_t>& distribution) {
  out << "requests,pages\n";
  for (const auto& [requests, pages] : distribution) out << requests << ',' << pages << '\n';
}

}  // namespace presence
