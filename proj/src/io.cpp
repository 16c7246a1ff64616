// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/io.hpp"

#include <charconv>
#include <sstream>
#include <string>

#include "mixmc/error.hpp"

namespace mixmc::io {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

template <typename T>
T get_field(const json& doc, const char* key, std::size_t line = 0) {
  if (!doc.is_object() || !doc.contains(key))
    throw ParseError(std::string("missing field '") + key + "'", line);
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what(), line);
  }
}

json parse_json_text(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line);
  }
}

double parse_double(std::string_view s, std::size_t line) {
  double v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("bad number '" + std::string(s) + "'", line);
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

json model_to_json(const MixtureModel& model) {
  json clusters = json::array();
  for (const auto& c : model.clusters())
    clusters.push_back({{"f", c.initial()}, {"T", matrix_to_json(c.transition())}});
  return {{"categories", model.categories().names()},
          {"K", model.num_clusters()},
          {"p", model.mixing()},
          {"clusters", std::move(clusters)}};
}

MixtureModel model_from_json(const json& doc) {
  CategorySet categories(get_field<std::vector<std::string>>(doc, "categories"));
  const auto k = get_field<std::size_t>(doc, "K");
  auto p = get_field<std::vector<double>>(doc, "p");
  if (!doc.contains("clusters")) throw ParseError("missing field 'clusters'", 0);
  const auto& cl = doc.at("clusters");
  if (!cl.is_array() || cl.size() != k)
    throw ParseError("'clusters' must be an array of K entries", 0);
  const std::size_t c = categories.size();
  std::vector<ChainParams> clusters;
  for (const auto& entry : cl) {
    auto f = get_field<std::vector<double>>(entry, "f");
    auto rows = get_field<std::vector<std::vector<double>>>(entry, "T");
    if (rows.size() != c) throw ParseError("transition matrix must have C rows", 0);
    Matrix t(c, c);
    for (std::size_t j = 0; j < c; ++j) {
      if (rows[j].size() != c) throw ParseError("transition row must have C entries", 0);
      for (std::size_t x = 0; x < c; ++x) t(j, x) = rows[j][x];
    }
    clusters.emplace_back(std::move(f), std::move(t));
  }
  return MixtureModel(std::move(categories), std::move(p), std::move(clusters));
}

void write_model(std::ostream& out, const MixtureModel& model) {
  out << model_to_json(model).dump(2) << "\n";
}

MixtureModel read_model(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(parse_json_text(buffer.str(), 0));
}

void write_sequences(std::ostream& out, const SequenceDataset& data) {
  out << json{{"categories", data.categories().names()}}.dump() << "\n";
  for (const auto& s : data)
    out << json{{"user", s.user}, {"city", s.city}, {"week", s.week.to_string()},
                {"states", s.states}}.dump()
        << "\n";
}

SequenceDataset read_sequences(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<CategorySet> categories;
  std::vector<Sequence> sequences;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const json doc = parse_json_text(line, line_no);
    if (!categories) {
      try {
        categories.emplace(get_field<std::vector<std::string>>(doc, "categories", line_no));
      } catch (const InvalidInput& e) {
        throw ParseError(e.what(), line_no);
      }
      continue;
    }
    Sequence s;
    s.user = get_field<std::string>(doc, "user", line_no);
    s.city = get_field<std::string>(doc, "city", line_no);
    try {
      s.week = IsoWeek::parse(get_field<std::string>(doc, "week", line_no));
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), line_no);
    }
    s.states = get_field<std::vector<State>>(doc, "states", line_no);
    if (s.states.empty()) throw ParseError("empty sequence", line_no);
    for (State x : s.states)
      if (x >= categories->size())
        throw ParseError("state " + std::to_string(x) + " outside the category set", line_no);
    sequences.push_back(std::move(s));
  }
  if (!categories) throw ParseError("sequence file lacks the categories header line", 0);
  return SequenceDataset(std::move(*categories), std::move(sequences));
}

void write_labels(std::ostream& out, const std::vector<std::size_t>& labels) {
  for (auto l : labels) out << l << "\n";
}

std::vector<std::size_t> read_labels(std::istream& in) {
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::size_t v;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw ParseError("bad label '" + line + "'", line_no);
    labels.push_back(v);
  }
  return labels;
}

void write_posteriors(std::ostream& out, const PosteriorMatrix& posteriors) {
  for (std::size_t i = 0; i < posteriors.num_clusters(); ++i) out << (i ? "," : "") << "g" << i;
  out << "\n";
  for (std::size_t s = 0; s < posteriors.num_sequences(); ++s) {
    for (std::size_t i = 0; i < posteriors.num_clusters(); ++i)
      out << (i ? "," : "") << format_double(posteriors(s, i));
    out << "\n";
  }
}

PosteriorMatrix read_posteriors(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty posteriors file", 0);
  ++line_no;
  strip_cr(line);
  const std::size_t k = split(line, ',').size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != k)
      throw ParseError("expected " + std::to_string(k) + " columns, found " +
                           std::to_string(fields.size()),
                       line_no);
    for (auto f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  Matrix g(rows, k);
  for (std::size_t s = 0; s < rows; ++s)
    for (std::size_t i = 0; i < k; ++i) g(s, i) = values[s * k + i];
  return PosteriorMatrix(std::move(g));
}

void write_trace(std::ostream& out, const FitResult& fit) {
  out << "iter,loglik,delta\n";
  double previous = fit.initial_log_likelihood.value;
  for (std::size_t i = 0; i < fit.log_likelihood_trace.size(); ++i) {
    const double v = fit.log_likelihood_trace[i].value;
    out << i + 1 << "," << format_double(v) << "," << format_double(v - previous) << "\n";
    previous = v;
  }
}

json report_to_json(const ClusterReport& report) {
  json clusters = json::array();
  for (const auto& c : report.clusters) {
    json top_cats = json::array();
    for (const auto& t : c.top_categories)
      top_cats.push_back({{"category", t.name}, {"index", t.category}, {"popularity", t.popularity}});
    json top_trans = json::array();
    for (const auto& t : c.top_transitions)
      top_trans.push_back({{"from", report.categories.name(t.from)},
                           {"to", report.categories.name(t.to)},
                           {"probability", t.probability}});
    clusters.push_back({{"model_index", c.source_index},
                        {"p_seqs", c.p_seqs},
                        {"p_users", c.p_users},
                        {"f", c.chain.initial()},
                        {"T", matrix_to_json(c.chain.transition())},
                        {"popularity", c.popularity},
                        {"top_categories", std::move(top_cats)},
                        {"top_transitions", std::move(top_trans)}});
  }
  return {{"categories", report.categories.names()},
          {"p_seqs", report.p_seqs},
          {"p_users", report.p_users},
          {"clusters", std::move(clusters)}};
}

}  // namespace mixmc::io
