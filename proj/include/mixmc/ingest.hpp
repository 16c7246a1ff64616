// Apache License, Version 2.0, refer to LICENSE.txt

// Check-in log ingestion: CSV parsing, per-user weekly sequences, activity
// filters and median-capped per-user downsampling.

#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "mixmc/model.hpp"

namespace mixmc {

/// Calendar date-time taken verbatim from the log; no time zone is applied.
using Timestamp = std::chrono::sys_seconds;

struct CheckinRecord {
  std::string userid;
  Timestamp datetime;
  std::string city;
  std::string category;
  State category_index = 0;
  std::optional<std::string> placeid;
  std::optional<double> lat;
  std::optional<double> lon;
};

struct IngestConfig {
  std::string city;  // empty keeps every city
  std::chrono::year_month_day date_from{std::chrono::year{2009} / 1 / 1};
  std::chrono::year_month_day date_to{std::chrono::year{2011} / 12 / 31};
  int min_checkins = 10;
  int min_seq_len = 2;
  std::uint64_t seed = 0;
  CategorySet categories = CategorySet::weeplaces();
  bool strict_categories = false;

  void validate() const;
};

struct ParseResult {
  std::vector<CheckinRecord> records;  // sorted by (userid, datetime), stable
  std::size_t rows_read = 0;
  std::size_t rows_other_city = 0;
  std::size_t rows_out_of_window = 0;
  std::size_t rows_unknown_category = 0;
  std::vector<std::string> warnings;
};

/// Parses a UTF-8 CSV whose header names at least userid, datetime, city and
/// category (placeid, lat and lon are optional). Rows outside the city filter
/// or the inclusive date window are dropped. Throws ParseError with the line
/// number on a malformed row, or on an unknown category when
/// strict_categories is set; otherwise unknown categories are skipped and
/// reported in warnings.
ParseResult parse_checkins(std::istream& source, const IngestConfig& config);

/// "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD HH:MM:SS"; nullopt if malformed.
std::optional<Timestamp> parse_timestamp(std::string_view text);

IsoWeek iso_week(Timestamp t);

struct BuildResult {
  SequenceDataset dataset;
  std::size_t users_seen = 0;
  std::size_t users_kept = 0;           // users with >= min_checkins records
  std::size_t sequences_grouped = 0;    // before the length filter
};

/// One sequence per (user, ISO week, city) in chronological order. Users with
/// fewer than min_checkins records are dropped, then sequences shorter than
/// min_seq_len. Output is ordered by user, week, city.
BuildResult build_sequences(const std::vector<CheckinRecord>& records,
                            const IngestConfig& config);

struct DownsampleResult {
  SequenceDataset dataset;
  std::size_t median = 0;  // Me
};

/// Me is the lower median of per-user sequence counts. Each user with more
/// than Me sequences keeps Me of them, drawn uniformly without replacement;
/// retained sequences keep their input order. Throws InvalidInput on an empty
/// dataset.
DownsampleResult downsample_per_user(const SequenceDataset& data, std::uint64_t seed);

}  // namespace mixmc
