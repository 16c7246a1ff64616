// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <tuple>
#include <unordered_map>

#include "mixmc/error.hpp"
#include "mixmc/random.hpp"

namespace mixmc {

namespace chr = std::chrono;

void IngestConfig::validate() const {
  if (min_checkins < 1) throw InvalidInput("min_checkins must be at least 1");
  if (min_seq_len < 1) throw InvalidInput("min_seq_len must be at least 1");
  if (!date_from.ok() || !date_to.ok()) throw InvalidInput("invalid date bound");
  if (chr::sys_days(date_from) > chr::sys_days(date_to))
    throw InvalidInput("date_from is after date_to");
}

namespace {

// Splits one CSV record. Double quotes delimit fields; "" inside is a literal quote.
std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) return std::nullopt;
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DD?HH:MM:SS
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':')
    return std::nullopt;
  int y, mo, d, h, mi, s;
  if (!parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), mo) ||
      !parse_number(text.substr(8, 2), d) || !parse_number(text.substr(11, 2), h) ||
      !parse_number(text.substr(14, 2), mi) || !parse_number(text.substr(17, 2), s))
    return std::nullopt;
  const chr::year_month_day date{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                 chr::day{static_cast<unsigned>(d)}};
  if (!date.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return chr::sys_days(date) + chr::hours{h} + chr::minutes{mi} + chr::seconds{s};
}

IsoWeek iso_week(Timestamp t) {
  const chr::sys_days day = chr::floor<chr::days>(t);
  const unsigned weekday = chr::weekday(day).iso_encoding();  // Monday = 1
  const chr::sys_days thursday = day + chr::days{4 - static_cast<int>(weekday)};
  const chr::year year = chr::year_month_day(thursday).year();
  const auto offset = (thursday - chr::sys_days(year / 1 / 1)).count();
  return IsoWeek{static_cast<int>(year), static_cast<int>(offset / 7 + 1)};
}

ParseResult parse_checkins(std::istream& source, const IngestConfig& config) {
  config.validate();
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(source, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw ParseError("missing header row", 0);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv(line);
  if (!header) throw ParseError("unterminated quote in header", line_no);

  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header->size(); ++i) column[(*header)[i]] = i;
  auto required = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw ParseError("header lacks column '" + name + "'", line_no);
    return it->second;
  };
  auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  const std::size_t col_user = required("userid");
  const std::size_t col_time = required("datetime");
  const std::size_t col_city = required("city");
  const std::size_t col_cat = required("category");
  const auto col_place = optional_col("placeid");
  const auto col_lat = optional_col("lat");
  const auto col_lon = optional_col("lon");

  const chr::sys_days from = chr::sys_days(config.date_from);
  const chr::sys_days to_exclusive = chr::sys_days(config.date_to) + chr::days{1};
  std::map<std::string, std::size_t> unknown;

  while (next_line()) {
    if (line.empty()) continue;
    ++result.rows_read;
    const auto fields = split_csv(line);
    if (!fields) throw ParseError("unterminated quote", line_no);
    if (fields->size() != header->size())
      throw ParseError("expected " + std::to_string(header->size()) + " fields, found " +
                           std::to_string(fields->size()),
                       line_no);
    const auto& f = *fields;

    CheckinRecord rec;
    rec.userid = f[col_user];
    rec.city = f[col_city];
    rec.category = f[col_cat];
    if (rec.userid.empty()) throw ParseError("empty userid", line_no);
    if (rec.city.empty()) throw ParseError("empty city", line_no);
    if (rec.category.empty()) throw ParseError("empty category", line_no);
    const auto when = parse_timestamp(f[col_time]);
    if (!when) throw ParseError("unparseable datetime '" + f[col_time] + "'", line_no);
    rec.datetime = *when;
    if (col_place && !f[*col_place].empty()) rec.placeid = f[*col_place];
    auto coordinate = [&](std::optional<std::size_t> col, const char* name) {
      std::optional<double> out;
      if (!col || f[*col].empty()) return out;
      double v;
      if (!parse_number(std::string_view(f[*col]), v))
        throw ParseError(std::string("bad ") + name + " '" + f[*col] + "'", line_no);
      out = v;
      return out;
    };
    rec.lat = coordinate(col_lat, "lat");
    rec.lon = coordinate(col_lon, "lon");

    if (!config.city.empty() && rec.city != config.city) {
      ++result.rows_other_city;
      continue;
    }
    if (rec.datetime < from || rec.datetime >= to_exclusive) {
      ++result.rows_out_of_window;
      continue;
    }
    const auto index = config.categories.index_of(rec.category);
    if (!index) {
      if (config.strict_categories)
        throw ParseError("unknown category '" + rec.category + "'", line_no);
      ++result.rows_unknown_category;
      ++unknown[rec.category];
      continue;
    }
    rec.category_index = *index;
    result.records.push_back(std::move(rec));
  }

  for (const auto& [name, count] : unknown)
    result.warnings.push_back("skipped " + std::to_string(count) + " rows with unknown category '" +
                              name + "'");

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const CheckinRecord& a, const CheckinRecord& b) {
                     return std::tie(a.userid, a.datetime) < std::tie(b.userid, b.datetime);
                   });
  return result;
}

BuildResult build_sequences(const std::vector<CheckinRecord>& records,
                            const IngestConfig& config) {
  config.validate();
  std::map<std::string, std::size_t> per_user;
  for (const auto& r : records) ++per_user[r.userid];

  // Records arrive sorted by (userid, datetime), so appending keeps each
  // group chronological.
  std::map<std::tuple<std::string, IsoWeek, std::string>, std::vector<State>> groups;
  std::size_t users_kept = 0;
  for (const auto& [user, count] : per_user)
    if (count >= static_cast<std::size_t>(config.min_checkins)) ++users_kept;
  for (const auto& r : records) {
    if (per_user[r.userid] < static_cast<std::size_t>(config.min_checkins)) continue;
    groups[{r.userid, iso_week(r.datetime), r.city}].push_back(r.category_index);
  }

  std::vector<Sequence> sequences;
  for (auto& [key, states] : groups) {
    if (states.size() < static_cast<std::size_t>(config.min_seq_len)) continue;
    const auto& [user, week, city] = key;
    sequences.push_back(Sequence{user, city, week, std::move(states)});
  }
  return BuildResult{SequenceDataset(config.categories, std::move(sequences)), per_user.size(),
                     users_kept, groups.size()};
}

DownsampleResult downsample_per_user(const SequenceDataset& data, std::uint64_t seed) {
  if (data.empty()) throw InvalidInput("cannot downsample an empty dataset");

  // Sequence indices per user, users in order of first appearance.
  std::vector<std::string> users;
  std::unordered_map<std::string, std::vector<std::size_t>> members;
  for (std::size_t s = 0; s < data.size(); ++s) {
    auto [it, inserted] = members.try_emplace(data[s].user);
    if (inserted) users.push_back(data[s].user);
    it->second.push_back(s);
  }

  std::vector<std::size_t> counts;
  counts.reserve(users.size());
  for (const auto& u : users) counts.push_back(members[u].size());
  std::sort(counts.begin(), counts.end());
  const std::size_t median = counts[(counts.size() + 1) / 2 - 1];

  Rng rng(seed);
  std::vector<bool> keep(data.size(), false);
  for (const auto& u : users) {
    auto& idx = members[u];
    if (idx.size() > median) {
      // Partial Fisher-Yates: the first `median` slots become the sample.
      for (std::size_t i = 0; i < median; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(median);
    }
    for (std::size_t s : idx) keep[s] = true;
  }

  std::vector<Sequence> kept;
  for (std::size_t s = 0; s < data.size(); ++s)
    if (keep[s]) kept.push_back(data[s]);
  return DownsampleResult{SequenceDataset(data.categories(), std::move(kept)), median};
}

}  // namespace mixmc
