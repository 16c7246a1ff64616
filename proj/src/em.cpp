// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/em.hpp"

#include <cmath>
#include <limits>

#include "mixmc/error.hpp"
#include "mixmc/random.hpp"
#include "parallel.hpp"

namespace mixmc {

PosteriorMatrix::PosteriorMatrix(Matrix g) : g_(std::move(g)) {
  for (std::size_t s = 0; s < g_.rows(); ++s) {
    double sum = 0.0;
    for (double x : g_.row(s)) {
      if (!(x >= 0.0 && x <= 1.0))
        throw InvalidInput("posterior row " + std::to_string(s) + " has entry outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw InvalidInput("posterior row " + std::to_string(s) + " sums to " +
                         std::to_string(sum));
  }
}

std::string to_string(InitMode mode) {
  return mode == InitMode::kRandom ? "random" : "uniform-jitter";
}

InitMode parse_init_mode(const std::string& text) {
  if (text == "uniform-jitter") return InitMode::kUniformJitter;
  if (text == "random") return InitMode::kRandom;
  throw InvalidInput("unknown init mode '" + text + "'");
}

void EmConfig::validate() const {
  if (num_clusters < 1) throw InvalidInput("K must be at least 1");
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (max_iters < 1) throw InvalidInput("max_iters must be at least 1");
  if (!(alpha >= 0.0)) throw InvalidInput("alpha must be non-negative");
  if (!(jitter_scale >= 0.0 && jitter_scale < 1.0))
    throw InvalidInput("jitter_scale must lie in [0, 1)");
  if (threads < 1) throw InvalidInput("threads must be at least 1");
}

namespace {

void normalize_in_place(std::span<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  for (double& x : v) x /= sum;
}

// Fills v with a uniform vector perturbed multiplicatively, or a flat Dirichlet draw.
void draw_vector(std::span<double> v, const EmConfig& config, Rng& rng) {
  const double u = 1.0 / static_cast<double>(v.size());
  if (config.init == InitMode::kRandom) {
    for (double& x : v) x = rng.exponential();
  } else {
    for (double& x : v) x = u * (1.0 + config.jitter_scale * (2.0 * rng.uniform() - 1.0));
  }
  normalize_in_place(v);
}

}  // namespace

MixtureModel initialize(const EmConfig& config, const CategorySet& categories) {
  config.validate();
  const std::size_t k = config.num_clusters;
  const std::size_t c = categories.size();

  if (config.init == InitMode::kUniformJitter && config.jitter_scale == 0.0) {
    return MixtureModel(categories, std::vector<double>(k, 1.0 / static_cast<double>(k)),
                        std::vector<ChainParams>(k, ChainParams::uniform(c)));
  }

  Rng rng(config.seed);
  std::vector<double> mixing(k, 1.0 / static_cast<double>(k));
  if (config.init == InitMode::kRandom && k > 1) draw_vector(mixing, config, rng);
  std::vector<ChainParams> clusters;
  clusters.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> f(c);
    draw_vector(f, config, rng);
    Matrix t(c, c);
    for (std::size_t j = 0; j < c; ++j) draw_vector(t.row(j), config, rng);
    clusters.emplace_back(std::move(f), std::move(t));
  }
  return MixtureModel(categories, std::move(mixing), std::move(clusters));
}

PosteriorMatrix e_step(const MixtureModel& model, const SequenceDataset& data, unsigned threads) {
  if (data.categories().size() != model.num_categories())
    throw InvalidInput("dataset and model disagree on the number of categories");
  const std::size_t n = data.size();
  const std::size_t k = model.num_clusters();
  std::vector<double> log_mixing(k);
  for (std::size_t i = 0; i < k; ++i)
    log_mixing[i] = model.mixing()[i] > 0.0 ? std::log(model.mixing()[i])
                                            : -std::numeric_limits<double>::infinity();

  Matrix g(n, k);
  detail::for_blocks(n, detail::block_count(n, threads),
                     [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> terms(k);
    for (std::size_t s = begin; s < end; ++s) {
      for (std::size_t i = 0; i < k; ++i)
        terms[i] = log_mixing[i] + sequence_log_prob(model.cluster(i), data[s]);
      const double total = log_sum_exp(terms);
      if (total == -std::numeric_limits<double>::infinity())
        throw DegeneracyError("sequence " + std::to_string(s) + " (user '" + data[s].user +
                                  "') has zero probability under every cluster",
                              s);
      auto row = g.row(s);
      for (std::size_t i = 0; i < k; ++i) row[i] = std::exp(terms[i] - total);
      normalize_in_place(row);
    }
  });
  return PosteriorMatrix(std::move(g));
}

MixtureModel m_step(const SequenceDataset& data, const PosteriorMatrix& posteriors, double alpha,
                    unsigned threads) {
  const std::size_t n = data.size();
  if (posteriors.num_sequences() != n)
    throw InvalidInput("posterior matrix has " + std::to_string(posteriors.num_sequences()) +
                       " rows for " + std::to_string(n) + " sequences");
  if (n == 0) throw InvalidInput("empty dataset");
  if (!(alpha >= 0.0)) throw InvalidInput("alpha must be non-negative");
  const std::size_t k = posteriors.num_clusters();
  const std::size_t c = data.categories().size();

  // Per block: weight sums (k), start counts (k*c), transition counts (k*c*c).
  struct Counts {
    std::vector<double> weight, start, trans;
  };
  const std::size_t blocks = detail::block_count(n, threads);
  std::vector<Counts> partial(blocks);
  detail::for_blocks(n, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    Counts acc{std::vector<double>(k, 0.0), std::vector<double>(k * c, 0.0),
               std::vector<double>(k * c * c, 0.0)};
    for (std::size_t s = begin; s < end; ++s) {
      const auto& states = data[s].states;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = posteriors(s, i);
        acc.weight[i] += w;
        if (w == 0.0) continue;
        acc.start[i * c + states.front()] += w;
        double* t = acc.trans.data() + i * c * c;
        for (std::size_t m = 1; m < states.size(); ++m) t[states[m - 1] * c + states[m]] += w;
      }
    }
    partial[b] = std::move(acc);
  });
  Counts total = std::move(partial.front());
  for (std::size_t b = 1; b < blocks; ++b) {
    for (std::size_t x = 0; x < total.weight.size(); ++x) total.weight[x] += partial[b].weight[x];
    for (std::size_t x = 0; x < total.start.size(); ++x) total.start[x] += partial[b].start[x];
    for (std::size_t x = 0; x < total.trans.size(); ++x) total.trans[x] += partial[b].trans[x];
  }

  auto smooth_row = [&](std::span<double> row) {
    double sum = 0.0;
    for (double& x : row) {
      x += alpha;
      sum += x;
    }
    if (sum == 0.0) {
      for (double& x : row) x = 1.0 / static_cast<double>(row.size());
    } else {
      for (double& x : row) x /= sum;
    }
  };

  std::vector<double> mixing(k);
  for (std::size_t i = 0; i < k; ++i) mixing[i] = total.weight[i] / static_cast<double>(n);

  std::vector<ChainParams> clusters;
  clusters.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> f(total.start.begin() + i * c, total.start.begin() + (i + 1) * c);
    smooth_row(f);
    Matrix t(c, c);
    for (std::size_t j = 0; j < c; ++j) {
      auto row = t.row(j);
      for (std::size_t x = 0; x < c; ++x) row[x] = total.trans[(i * c + j) * c + x];
      smooth_row(row);
    }
    clusters.emplace_back(std::move(f), std::move(t));
  }
  return MixtureModel(data.categories(), std::move(mixing), std::move(clusters));
}

FitResult fit(const SequenceDataset& data, const EmConfig& config, const FitObserver& observer) {
  config.validate();
  return fit_from(data, initialize(config, data.categories()), config, observer);
}

FitResult fit_from(const SequenceDataset& data, MixtureModel start, const EmConfig& config,
                   const FitObserver& observer) {
  config.validate();
  if (data.empty()) throw InvalidInput("cannot fit an empty dataset");
  if (!(start.categories() == data.categories()))
    throw InvalidInput("starting model and dataset use different categories");

  std::vector<std::string> warnings;
  if (data.size() < start.num_clusters())
    warnings.push_back("only " + std::to_string(data.size()) + " sequences for " +
                       std::to_string(start.num_clusters()) + " clusters");

  const LogLikelihood initial = corpus_log_likelihood(start, data, config.threads);
  MixtureModel model = std::move(start);
  PosteriorMatrix posteriors;
  std::vector<LogLikelihood> trace;
  LogLikelihood previous = initial;
  bool converged = false;

  for (int it = 1; it <= config.max_iters; ++it) {
    posteriors = e_step(model, data, config.threads);
    model = m_step(data, posteriors, config.alpha, config.threads);
    const LogLikelihood current = corpus_log_likelihood(model, data, config.threads);
    trace.push_back(current);
    if (observer) observer(IterationState{it, posteriors, model, current});
    const double delta = current.value - previous.value;
    previous = current;
    if (delta < config.epsilon) {
      converged = true;
      break;
    }
  }

  const int iterations = static_cast<int>(trace.size());
  return FitResult{std::move(model), std::move(posteriors), initial, std::move(trace),
                   iterations,       converged,             std::move(warnings)};
}

}  // namespace mixmc
