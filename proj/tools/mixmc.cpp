// Apache License, Version 2.0, refer to LICENSE.txt

// mixmc: file-mediated pipeline for clustering categorical sequences with a
// mixture of Markov chains.
//
//   mixmc ingest    check-in CSV      -> sequence file
//   mixmc fit       sequence file     -> model, trace, posteriors
//   mixmc report    model + sequences + posteriors -> report JSON + text
//   mixmc predict   model + sequences -> cluster assignment and forecast per user
//   mixmc simulate  model             -> synthetic sequence file + labels
//
// Exit codes: 0 ok, 1 I/O failure, 2 malformed or inconsistent input,
// 3 EM did not converge under --strict, 4 stationary distribution failed.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mixmc/analysis.hpp"
#include "mixmc/em.hpp"
#include "mixmc/error.hpp"
#include "mixmc/ingest.hpp"
#include "mixmc/io.hpp"
#include "mixmc/synth.hpp"

namespace fs = std::filesystem;
using mixmc::io::json;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitInput = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitStationary = 4;

struct ExitError {
  int code;
  std::string message;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExitError{kExitIo, "cannot open '" + path + "' for reading"};
  return in;
}

// Writes through a string so that a failed run never leaves a partial file.
void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ExitError{kExitIo, "cannot open '" + path + "' for writing"};
  out << contents;
  if (!out) throw ExitError{kExitIo, "failed writing '" + path + "'"};
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::chrono::year_month_day parse_date(const std::string& text) {
  const auto t = mixmc::parse_timestamp(text + "T00:00:00");
  if (!t) throw ExitError{kExitInput, "bad date '" + text + "', expected YYYY-MM-DD"};
  return std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(*t));
}

std::string format_date(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

// Reproducibility record written next to a command's primary output.
class Manifest {
 public:
  explicit Manifest(std::string command)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json& config() { return config_; }
  json& results() { return results_; }
  void input(const std::string& role, const std::string& path) { inputs_[role] = path; }
  void output(const std::string& role, const std::string& path) { outputs_[role] = path; }

  void write(const std::string& path) const {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    json doc{{"command", command_},
             {"tool_version", MIXMC_VERSION},
             {"config", config_},
             {"inputs", inputs_},
             {"outputs", outputs_},
             {"results", results_},
             {"wall_clock_seconds", elapsed.count()}};
    write_file(path, doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  json results_ = json::object();
  json inputs_ = json::object();
  json outputs_ = json::object();
};

mixmc::SequenceDataset load_sequences(const std::string& path) {
  auto in = open_in(path);
  return mixmc::io::read_sequences(in);
}

mixmc::MixtureModel load_model(const std::string& path) {
  auto in = open_in(path);
  return mixmc::io::read_model(in);
}

std::string vector_text(const std::vector<double>& v) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v[i]);
    out << (i ? ", " : "") << buf;
  }
  out << ")";
  return out.str();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, output, manifest, city;
  std::string date_from = "2009-01-01", date_to = "2011-12-31";
  int min_checkins = 10, min_seq_len = 2;
  std::uint64_t seed = 0;
  bool strict = false, no_downsample = false;
  std::vector<std::string> categories;
};

int run_ingest(const IngestArgs& a) {
  mixmc::IngestConfig cfg;
  cfg.city = a.city;
  cfg.date_from = parse_date(a.date_from);
  cfg.date_to = parse_date(a.date_to);
  cfg.min_checkins = a.min_checkins;
  cfg.min_seq_len = a.min_seq_len;
  cfg.seed = a.seed;
  cfg.strict_categories = a.strict;
  if (!a.categories.empty()) cfg.categories = mixmc::CategorySet(a.categories);
  cfg.validate();

  Manifest manifest("ingest");
  manifest.config() = {{"city", a.city},
                       {"date_from", format_date(cfg.date_from)},
                       {"date_to", format_date(cfg.date_to)},
                       {"min_checkins", cfg.min_checkins},
                       {"min_seq_len", cfg.min_seq_len},
                       {"seed", cfg.seed},
                       {"strict_categories", cfg.strict_categories},
                       {"downsample", !a.no_downsample},
                       {"categories", cfg.categories.names()}};
  manifest.input("checkins", a.input);

  auto in = open_in(a.input);
  const auto parsed = mixmc::parse_checkins(in, cfg);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "rows read:                " << parsed.rows_read << "\n"
            << "rows in other cities:     " << parsed.rows_other_city << "\n"
            << "rows outside date window: " << parsed.rows_out_of_window << "\n"
            << "rows unknown category:    " << parsed.rows_unknown_category << "\n"
            << "records kept:             " << parsed.records.size() << "\n";
  if (parsed.records.empty()) throw ExitError{kExitInput, "no records in '" + a.input + "'"};

  const auto built = mixmc::build_sequences(parsed.records, cfg);
  std::cout << "users:                    " << built.users_seen << "\n"
            << "users with >= " << cfg.min_checkins << " check-ins: " << built.users_kept << "\n"
            << "sequences (user-weeks):   " << built.sequences_grouped << "\n"
            << "sequences after length filter: " << built.dataset.size() << "\n";

  mixmc::SequenceDataset result = built.dataset;
  std::size_t median = 0;
  if (result.empty()) {
    std::cerr << "warning: no sequences left after filtering\n";
  } else if (!a.no_downsample) {
    auto down = mixmc::downsample_per_user(result, cfg.seed);
    median = down.median;
    result = std::move(down.dataset);
    std::cout << "median sequences per user (Me): " << median << "\n"
              << "sequences after downsampling:   " << result.size() << "\n";
  }

  write_file(a.output, render([&](std::ostream& o) { mixmc::io::write_sequences(o, result); }));
  manifest.output("sequences", a.output);
  manifest.results() = {{"rows_read", parsed.rows_read},
                        {"records_kept", parsed.records.size()},
                        {"users_seen", built.users_seen},
                        {"users_kept", built.users_kept},
                        {"sequences_grouped", built.sequences_grouped},
                        {"sequences_after_length_filter", built.dataset.size()},
                        {"median_per_user", median},
                        {"sequences_written", result.size()}};
  manifest.write(a.manifest.empty() ? sibling(a.output, ".manifest.json") : a.manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input, output, trace, posteriors, manifest;
  std::string init = "uniform-jitter";
  mixmc::EmConfig em;
  bool strict = false;
};

int run_fit(FitArgs a) {
  a.em.init = mixmc::parse_init_mode(a.init);
  a.em.validate();
  const std::string trace_path = a.trace.empty() ? sibling(a.output, ".trace.csv") : a.trace;
  const std::string post_path =
      a.posteriors.empty() ? sibling(a.output, ".posteriors.csv") : a.posteriors;

  Manifest manifest("fit");
  manifest.config() = {{"K", a.em.num_clusters},   {"epsilon", a.em.epsilon},
                       {"max_iters", a.em.max_iters}, {"alpha", a.em.alpha},
                       {"init", a.init},           {"seed", a.em.seed},
                       {"jitter_scale", a.em.jitter_scale}, {"threads", a.em.threads},
                       {"strict", a.strict}};
  manifest.input("sequences", a.input);

  const auto data = load_sequences(a.input);
  if (data.empty()) throw ExitError{kExitInput, "no sequences in '" + a.input + "'"};
  const auto result = mixmc::fit(data, a.em);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  write_file(a.output, render([&](std::ostream& o) { mixmc::io::write_model(o, result.model); }));
  write_file(trace_path, render([&](std::ostream& o) { mixmc::io::write_trace(o, result); }));
  write_file(post_path,
             render([&](std::ostream& o) { mixmc::io::write_posteriors(o, result.posteriors); }));

  const double final_ll = result.log_likelihood_trace.back().value;
  std::cout << "sequences:      " << data.size() << "\n"
            << "iterations:     " << result.iterations << "\n"
            << "converged:      " << (result.converged ? "yes" : "no") << "\n"
            << "log-likelihood: " << mixmc::io::format_double(final_ll) << "\n"
            << "p:              " << vector_text(result.model.mixing()) << "\n";

  manifest.output("model", a.output);
  manifest.output("trace", trace_path);
  manifest.output("posteriors", post_path);
  manifest.results() = {{"sequences", data.size()},
                        {"iterations", result.iterations},
                        {"converged", result.converged},
                        {"log_likelihood", final_ll}};
  manifest.write(a.manifest.empty() ? sibling(a.output, ".manifest.json") : a.manifest);

  if (!result.converged && a.strict)
    throw ExitError{kExitNotConverged, "EM did not converge within " +
                                           std::to_string(a.em.max_iters) + " iterations"};
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string model, sequences, posteriors, output, text, manifest;
  std::size_t top_k = 3;
};

int run_report(const ReportArgs& a) {
  Manifest manifest("report");
  manifest.config() = {{"top_k", a.top_k}};
  manifest.input("model", a.model);
  manifest.input("sequences", a.sequences);
  manifest.input("posteriors", a.posteriors);

  const auto model = load_model(a.model);
  const auto data = load_sequences(a.sequences);
  auto post_in = open_in(a.posteriors);
  const auto posteriors = mixmc::io::read_posteriors(post_in);
  if (a.top_k < 1) throw ExitError{kExitInput, "--top-k must be at least 1"};

  const auto report = mixmc::make_report(model, data, posteriors, a.top_k);
  const std::string text = mixmc::render_text(report);
  const std::string text_path = a.text.empty() ? sibling(a.output, ".txt") : a.text;
  write_file(a.output, mixmc::io::report_to_json(report).dump(2) + "\n");
  write_file(text_path, text);
  std::cout << text;

  manifest.output("report", a.output);
  manifest.output("text", text_path);
  manifest.write(a.manifest.empty() ? sibling(a.output, ".manifest.json") : a.manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, sequences, user, output, manifest;
  double tol = 1e-10;
  int max_iters = 10000;
};

int run_predict(const PredictArgs& a) {
  const auto model = load_model(a.model);
  const auto data = load_sequences(a.sequences);
  if (!(model.categories() == data.categories()))
    throw ExitError{kExitInput, "model and sequences use different categories"};

  std::vector<std::string> users;
  std::map<std::string, std::vector<mixmc::Sequence>> by_user;
  for (const auto& s : data) {
    if (!a.user.empty() && s.user != a.user) continue;
    auto& v = by_user[s.user];
    if (v.empty()) users.push_back(s.user);
    v.push_back(s);
  }
  if (users.empty())
    throw ExitError{kExitInput, a.user.empty() ? "no sequences" : "no sequences for user '" + a.user + "'"};

  json out = json::array();
  int status = 0;
  for (const auto& u : users) {
    const auto assignment = mixmc::assign_user(model, by_user[u]);
    std::cout << "user " << u << ": cluster " << assignment.cluster
              << ", p^u = " << vector_text(assignment.membership) << "\n";
    json entry{{"user", u}, {"cluster", assignment.cluster}, {"membership", assignment.membership}};
    try {
      const auto pi =
          mixmc::stationary_distribution(model.cluster(assignment.cluster), a.tol, a.max_iters);
      std::cout << "  stationary distribution:\n";
      for (std::size_t j = 0; j < pi.size(); ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", pi[j]);
        std::cout << "    " << model.categories().name(j) << ", " << buf << "\n";
      }
      entry["stationary"] = pi;
    } catch (const mixmc::ConvergenceError& e) {
      std::cerr << "error: user " << u << ": " << e.what() << "\n";
      entry["stationary"] = nullptr;
      entry["error"] = e.what();
      status = kExitStationary;
    }
    out.push_back(std::move(entry));
  }

  if (!a.output.empty()) {
    write_file(a.output, out.dump(2) + "\n");
    Manifest manifest("predict");
    manifest.config() = {{"user", a.user}, {"tol", a.tol}, {"max_iters", a.max_iters}};
    manifest.input("model", a.model);
    manifest.input("sequences", a.sequences);
    manifest.output("predictions", a.output);
    manifest.write(a.manifest.empty() ? sibling(a.output, ".manifest.json") : a.manifest);
  }
  return status;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model, output, labels, manifest;
  std::size_t n = 1000, length = 20, min_length = 0, max_length = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  mixmc::SynthConfig cfg;
  cfg.n_sequences = a.n;
  cfg.seed = a.seed;
  if (a.min_length || a.max_length)
    cfg.lengths = mixmc::LengthRange{a.min_length, a.max_length};
  else
    cfg.lengths = mixmc::FixedLength{a.length};
  cfg.validate();

  const auto model = load_model(a.model);
  const auto sampled = mixmc::sample(model, cfg);
  const std::string labels_path = a.labels.empty() ? sibling(a.output, ".labels.txt") : a.labels;
  write_file(a.output,
             render([&](std::ostream& o) { mixmc::io::write_sequences(o, sampled.dataset); }));
  write_file(labels_path,
             render([&](std::ostream& o) { mixmc::io::write_labels(o, sampled.labels); }));
  std::cout << "wrote " << sampled.dataset.size() << " sequences to " << a.output << "\n";

  Manifest manifest("simulate");
  manifest.config() = {{"n", a.n}, {"seed", a.seed}, {"rng", "mt19937_64"}};
  if (const auto* r = std::get_if<mixmc::LengthRange>(&cfg.lengths))
    manifest.config()["lengths"] = {{"min", r->min}, {"max", r->max}};
  else
    manifest.config()["lengths"] = {{"fixed", std::get<mixmc::FixedLength>(cfg.lengths).length}};
  manifest.input("model", a.model);
  manifest.output("sequences", a.output);
  manifest.output("labels", labels_path);
  manifest.write(a.manifest.empty() ? sibling(a.output, ".manifest.json") : a.manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster categorical sequences with a mixture of Markov chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MIXMC_VERSION);

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "Build weekly category sequences from a check-in CSV");
  ing->add_option("-i,--input", ingest.input, "Check-in CSV")->required();
  ing->add_option("-o,--output", ingest.output, "Sequence file to write")->required();
  ing->add_option("--city", ingest.city, "Keep only this city (default: all)");
  ing->add_option("--from", ingest.date_from, "First date kept, YYYY-MM-DD")->capture_default_str();
  ing->add_option("--to", ingest.date_to, "Last date kept, YYYY-MM-DD")->capture_default_str();
  ing->add_option("--min-checkins", ingest.min_checkins, "Drop users with fewer check-ins")
      ->capture_default_str();
  ing->add_option("--min-seq-len", ingest.min_seq_len, "Drop shorter sequences")->capture_default_str();
  ing->add_option("--seed", ingest.seed, "Downsampling seed")->envname("MIXMC_SEED")->capture_default_str();
  ing->add_option("--categories", ingest.categories, "Category vocabulary, comma separated")
      ->delimiter(',');
  ing->add_flag("--strict", ingest.strict, "Fail on unknown categories instead of skipping them");
  ing->add_flag("--no-downsample", ingest.no_downsample, "Keep every sequence of every user");
  ing->add_option("--manifest", ingest.manifest, "Manifest path (default: <output>.manifest.json)");

  FitArgs fit;
  auto* fc = app.add_subcommand("fit", "Fit the mixture with EM");
  fc->add_option("-i,--input", fit.input, "Sequence file")->required();
  fc->add_option("-o,--output", fit.output, "Model JSON to write")->required();
  fc->add_option("-K,--clusters", fit.em.num_clusters, "Number of clusters")->capture_default_str();
  fc->add_option("--epsilon", fit.em.epsilon, "Stop when the log-likelihood gain is below this")
      ->capture_default_str();
  fc->add_option("--max-iters", fit.em.max_iters, "Iteration cap")->capture_default_str();
  fc->add_option("--alpha", fit.em.alpha, "Additive smoothing pseudo-count")->capture_default_str();
  fc->add_option("--init", fit.init, "uniform-jitter or random")->capture_default_str();
  fc->add_option("--jitter-scale", fit.em.jitter_scale, "Relative jitter of the uniform start")
      ->capture_default_str();
  fc->add_option("--seed", fit.em.seed, "Initialization seed")->envname("MIXMC_SEED")->capture_default_str();
  fc->add_option("--threads", fit.em.threads, "Worker threads (1 is bit-reproducible)")
      ->capture_default_str();
  fc->add_option("--trace", fit.trace, "Trace CSV (default: <output>.trace.csv)");
  fc->add_option("--posteriors", fit.posteriors, "Posteriors CSV (default: <output>.posteriors.csv)");
  fc->add_flag("--strict", fit.strict, "Exit 3 when the iteration cap is hit");
  fc->add_option("--manifest", fit.manifest, "Manifest path (default: <output>.manifest.json)");

  ReportArgs report;
  auto* rc = app.add_subcommand("report", "Summarize a fitted model");
  rc->add_option("-m,--model", report.model, "Model JSON")->required();
  rc->add_option("-s,--sequences", report.sequences, "Sequence file used for the fit")->required();
  rc->add_option("-p,--posteriors", report.posteriors, "Posteriors CSV from the fit")->required();
  rc->add_option("-o,--output", report.output, "Report JSON to write")->required();
  rc->add_option("--text", report.text, "Text rendering (default: <output>.txt)");
  rc->add_option("--top-k", report.top_k, "Categories and transitions listed per cluster")
      ->capture_default_str();
  rc->add_option("--manifest", report.manifest, "Manifest path (default: <output>.manifest.json)");

  PredictArgs predict;
  auto* pc = app.add_subcommand("predict", "Assign users to clusters and forecast category frequencies");
  pc->add_option("-m,--model", predict.model, "Model JSON")->required();
  pc->add_option("-s,--sequences", predict.sequences, "Sequence file")->required();
  pc->add_option("--user", predict.user, "Only this user (default: every user in the file)");
  pc->add_option("--tol", predict.tol, "Power iteration tolerance")->capture_default_str();
  pc->add_option("--max-iters", predict.max_iters, "Power iteration cap")->capture_default_str();
  pc->add_option("-o,--output", predict.output, "Predictions JSON to write");
  pc->add_option("--manifest", predict.manifest, "Manifest path (default: <output>.manifest.json)");

  SimulateArgs simulate;
  auto* sc = app.add_subcommand("simulate", "Sample synthetic sequences from a model");
  sc->add_option("-m,--model", simulate.model, "Model JSON")->required();
  sc->add_option("-o,--output", simulate.output, "Sequence file to write")->required();
  sc->add_option("--labels", simulate.labels, "Labels file (default: <output>.labels.txt)");
  sc->add_option("-n,--sequences", simulate.n, "Number of sequences")->capture_default_str();
  sc->add_option("--length", simulate.length, "Fixed sequence length")->capture_default_str();
  sc->add_option("--min-length", simulate.min_length, "Uniform length range, lower end");
  sc->add_option("--max-length", simulate.max_length, "Uniform length range, upper end");
  sc->add_option("--seed", simulate.seed, "Sampling seed")->envname("MIXMC_SEED")->capture_default_str();
  sc->add_option("--manifest", simulate.manifest, "Manifest path (default: <output>.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (*ing) return run_ingest(ingest);
    if (*fc) return run_fit(fit);
    if (*rc) return run_report(report);
    if (*pc) return run_predict(predict);
    if (*sc) return run_simulate(simulate);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const mixmc::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStationary;
  } catch (const mixmc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
