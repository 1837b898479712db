#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "presence/core_model.hpp"
#include "presence/geo.hpp"

namespace presence {

// ---------------------------------------------------------------------------
// Hourly page-request statistics
// ---------------------------------------------------------------------------

struct PageHourRecord {
  std::string project;
  std::string page;
  std::string hour;  // clock-hour identifier, e.g. 2008-09-13T01
  std::uint64_t requests;

  friend bool operator==(const PageHourRecord&, const PageHourRecord&) = default;
};

struct PagecountBatch {
  std::vector<PageHourRecord> records;
  std::size_t malformed = 0;
  std::size_t filtered = 0;  // well-formed lines of other projects
};

/// Parses Wikimedia raw pagecount lines (`project page_title count bytes`)
/// for one hour. Malformed lines are counted and skipped. Repeated
/// (project, page) lines within the hour are summed.
PagecountBatch ingest_pagecounts(std::istream& in, std::string_view project_filter,
                                 const std::string& hour);

/// Plain or gzip-compressed pagecount file. The hour comes from a
/// `pagecounts-YYYYMMDD-HH....` file name when present, else the stem.
PagecountBatch read_pagecount_file(const std::filesystem::path& path,
                                   std::string_view project_filter);

std::string hour_from_filename(std::string_view filename);

/// requests -> number of pages with exactly that many requests.
std::map<std::uint64_t, std::size_t> visitor_distribution(std::span<const PageHourRecord> records);

struct MeetingProbability {
  double page_weighted;     // share of pages with >= x requests
  double request_weighted;  // share of requests that land on such pages
};

/// Probability that x or more requests hit the same page within an hour,
/// averaged over the hours present in `records`.
MeetingProbability meeting_probability(std::span<const PageHourRecord> records, std::uint64_t x);

// ---------------------------------------------------------------------------
// GPS track statistics
// ---------------------------------------------------------------------------

struct TrackCell {
  double r_v;
  Epoch t_v_min;
  std::vector<DetectedVisit> visits;
  std::vector<std::uint32_t> parallel_visits;  // one entry per track reading
  Epoch accumulated_seconds = 0;
  std::size_t visited_locations = 0;
  std::size_t visit_count = 0;
  double avg_duration_seconds = 0.0;
  double avg_visits = 0.0;

  friend bool operator==(const TrackCell&, const TrackCell&) = default;
};

struct TrackReport {
  std::vector<Epoch> timestamps;
  std::vector<TrackCell> cells;  // r_v-major, then t_v_min, in input order

  const TrackCell& cell(double r_v, Epoch t_v_min) const;
};

/// Runs visit detection for every (r_v, t_v_min) combination and summarizes
/// parallel visits, accumulated time, visited locations and revisits.
/// Accumulated time counts parallel visits once per location, so it can
/// exceed the track's wall-clock duration.
TrackReport track_report(const GeoTrack& track, const LocationRegistry& registry,
                         std::span<const double> r_v, std::span<const Epoch> t_v_min,
                         Epoch gap_max = 5);

/// Seconds rendered as mm:ss (minutes unbounded), rounded to the second.
std::string format_mmss(double seconds);

// CSV header: r_v,t_v_min,accum_seconds,n_locations,n_visits,avg_duration_s,avg_duration_mmss,avg_visits
void write_report_csv(std::ostream& out, const TrackReport& report);
// CSV header: r_v,t_v_min,epoch_seconds,parallel_visits
void write_parallel_series(std::ostream& out, const TrackReport& report);
// CSV header: requests,pages
void write_distribution_csv(std::ostream& out,
                            const std::map<std::uint64_t, std::size_t>& distribution);

namespace reference {

TrackReport track_report(const GeoTrack& track, const LocationRegistry& registry,
                         std::span<const double> r_v, std::span<const Epoch> t_v_min,
                         Epoch gap_max = 5);

}  // namespace reference

}  // namespace presence
