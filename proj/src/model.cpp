// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "mixmc/error.hpp"
#include "parallel.hpp"

namespace mixmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Steps this small are rounding noise for probability vectors.
constexpr double kMachineNoise = 1e-15;

void check_probability_vector(std::span<const double> v, const std::string& what) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0))
      throw InvalidInput(what + ": entry " + std::to_string(x) + " outside [0,1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw InvalidInput(what + ": sums to " + std::to_string(sum) + ", expected 1");
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

// ---------------------------------------------------------------------------
// CategorySet

CategorySet::CategorySet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2)
    throw InvalidInput("category set needs at least 2 categories");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw InvalidInput("empty category name");
    if (!index_.emplace(names_[i], static_cast<State>(i)).second)
      throw InvalidInput("duplicate category name '" + names_[i] + "'");
  }
}

CategorySet CategorySet::weeplaces() {
  return CategorySet({"Food", "Art & Entertainment", "College & Education", "Home/Work",
                      "Nightlife", "Parks & Outdoors", "Shops", "Travel"});
}

std::optional<State> CategorySet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// IsoWeek

std::string IsoWeek::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", year, week);
  return buf;
}

IsoWeek IsoWeek::parse(std::string_view text) {
  auto fail = [&] { return InvalidInput("bad ISO week '" + std::string(text) + "'"); };
  if (text.size() != 8 || text[4] != '-' || text[5] != 'W') throw fail();
  IsoWeek w;
  auto r1 = std::from_chars(text.data(), text.data() + 4, w.year);
  auto r2 = std::from_chars(text.data() + 6, text.data() + 8, w.week);
  if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} ||
      r2.ptr != text.data() + 8 || w.week > 53)
    throw fail();
  return w;
}

// ---------------------------------------------------------------------------
// SequenceDataset

SequenceDataset::SequenceDataset(CategorySet categories, std::vector<Sequence> sequences)
    : categories_(std::move(categories)), sequences_(std::move(sequences)) {
  const std::size_t c = categories_.size();
  for (std::size_t i = 0; i < sequences_.size(); ++i) {
    const auto& s = sequences_[i];
    if (s.states.empty())
      throw InvalidInput("sequence " + std::to_string(i) + " is empty");
    for (State x : s.states)
      if (x >= c)
        throw InvalidInput("sequence " + std::to_string(i) + " has state " +
                           std::to_string(x) + " outside [0, " + std::to_string(c) + ")");
  }
}

// ---------------------------------------------------------------------------
// ChainParams

ChainParams::ChainParams(std::vector<double> initial, Matrix transition)
    : initial_(std::move(initial)), transition_(std::move(transition)) {
  const std::size_t c = initial_.size();
  if (c == 0) throw InvalidInput("chain has no states");
  if (transition_.rows() != c || transition_.cols() != c)
    throw InvalidInput("transition matrix is " + std::to_string(transition_.rows()) + "x" +
                       std::to_string(transition_.cols()) + ", expected " +
                       std::to_string(c) + "x" + std::to_string(c));
  check_probability_vector(initial_, "initial distribution");
  for (std::size_t r = 0; r < c; ++r)
    check_probability_vector(transition_.row(r), "transition row " + std::to_string(r));

  log_initial_.resize(c);
  log_transition_ = Matrix(c, c);
  for (std::size_t j = 0; j < c; ++j) {
    log_initial_[j] = safe_log(initial_[j]);
    for (std::size_t k = 0; k < c; ++k) log_transition_(j, k) = safe_log(transition_(j, k));
  }
}

ChainParams ChainParams::uniform(std::size_t num_categories) {
  const double u = 1.0 / static_cast<double>(num_categories);
  return ChainParams(std::vector<double>(num_categories, u),
                     Matrix(num_categories, num_categories, u));
}

// ---------------------------------------------------------------------------
// MixtureModel

MixtureModel::MixtureModel(CategorySet categories, std::vector<double> mixing,
                           std::vector<ChainParams> clusters)
    : categories_(std::move(categories)),
      mixing_(std::move(mixing)),
      clusters_(std::move(clusters)) {
  if (clusters_.empty()) throw InvalidInput("mixture needs at least one cluster");
  if (mixing_.size() != clusters_.size())
    throw InvalidInput("mixing distribution has " + std::to_string(mixing_.size()) +
                       " entries for " + std::to_string(clusters_.size()) + " clusters");
  check_probability_vector(mixing_, "mixing distribution");
  for (std::size_t i = 0; i < clusters_.size(); ++i)
    if (clusters_[i].num_categories() != categories_.size())
      throw InvalidInput("cluster " + std::to_string(i) + " has " +
                         std::to_string(clusters_[i].num_categories()) + " states, expected " +
                         std::to_string(categories_.size()));
}

// ---------------------------------------------------------------------------
// Likelihoods

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return kNegInf;
  const double m = *std::max_element(x.begin(), x.end());
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

double sequence_log_prob(const ChainParams& chain, const Sequence& s) {
  const std::size_t c = chain.num_categories();
  if (s.states.empty()) throw InvalidInput("empty sequence");
  for (State x : s.states)
    if (x >= c)
      throw InvalidInput("state " + std::to_string(x) + " outside chain with " +
                         std::to_string(c) + " categories");
  double lp = chain.log_initial(s.states.front());
  for (std::size_t m = 1; m < s.states.size(); ++m)
    lp += chain.log_transition(s.states[m - 1], s.states[m]);
  return lp;
}

double mixture_log_prob(const MixtureModel& model, const Sequence& s) {
  std::vector<double> terms(model.num_clusters());
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] = safe_log(model.mixing()[i]) + sequence_log_prob(model.cluster(i), s);
  return log_sum_exp(terms);
}

LogLikelihood corpus_log_likelihood(const MixtureModel& model, const SequenceDataset& data,
                                    unsigned threads) {
  if (data.empty()) throw InvalidInput("empty dataset");
  if (data.categories().size() != model.num_categories())
    throw InvalidInput("dataset and model disagree on the number of categories");
  const std::size_t blocks = detail::block_count(data.size(), threads);
  std::vector<double> partial(blocks, 0.0);
  detail::for_blocks(data.size(), blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t s = begin; s < end; ++s) acc += mixture_log_prob(model, data[s]);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return {total};
}

// ---------------------------------------------------------------------------
// Stationary distribution

namespace {

// Returns an empty string for an irreducible aperiodic chain, otherwise the reason.
std::string ergodicity_problem(const Matrix& t) {
  const std::size_t c = t.rows();
  auto reach_all = [&](bool reverse) {
    std::vector<bool> seen(c, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < c; ++v) {
        const double w = reverse ? t(v, u) : t(u, v);
        if (w > 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  if (!reach_all(false) || !reach_all(true)) return "transition graph is reducible";

  // Period of a strongly connected graph: gcd of level[u] + 1 - level[v] over edges.
  std::vector<long> level(c, -1);
  std::queue<std::size_t> queue;
  level[0] = 0;
  queue.push(0);
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop();
    for (std::size_t v = 0; v < c; ++v)
      if (t(u, v) > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push(v);
      }
  }
  long period = 0;
  for (std::size_t u = 0; u < c; ++u)
    for (std::size_t v = 0; v < c; ++v)
      if (t(u, v) > 0.0) period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
  if (period != 1) return "transition graph is periodic with period " + std::to_string(period);
  return {};
}

void step(const Matrix& t, std::span<const double> pi, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < t.rows(); ++j)
    for (std::size_t k = 0; k < t.cols(); ++k) out[k] += pi[j] * t(j, k);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

void normalize(std::span<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  for (double& x : v) x /= sum;
}

}  // namespace

std::vector<double> stationary_distribution(const ChainParams& chain, double tol, int max_iters) {
  if (!(tol > 0.0)) throw InvalidInput("stationary distribution tolerance must be positive");
  if (max_iters < 1) throw InvalidInput("stationary distribution needs max_iters >= 1");
  const Matrix& t = chain.transition();
  const std::size_t c = chain.num_categories();
  std::vector<double> pi(c, 1.0 / static_cast<double>(c));
  std::vector<double> next(c);

  if (auto problem = ergodicity_problem(t); !problem.empty()) {
    step(t, pi, next);
    throw ConvergenceError("stationary distribution undefined: " + problem, pi,
                           max_abs_diff(next, pi));
  }

  // Stop once the step is below tol and the geometric tail of the remaining
  // steps, estimated from the observed contraction ratio, is below tol too.
  double residual = 0.0;
  double previous = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    step(t, pi, next);
    normalize(next);
    residual = max_abs_diff(next, pi);
    pi.swap(next);
    const double ratio = previous > 0.0 ? residual / previous : 1.0;
    previous = residual;
    const bool settled = residual <= kMachineNoise ||
                         (ratio < 1.0 && residual * ratio / (1.0 - ratio) <= tol);
    if (residual <= tol && settled) {
      step(t, pi, next);
      residual = max_abs_diff(next, pi);
      if (residual <= tol) return pi;
    }
  }
  throw ConvergenceError("power iteration did not reach tolerance " + std::to_string(tol) +
                             " in " + std::to_string(max_iters) + " iterations",
                         pi, residual);
}

}  // namespace mixmc
