// Apache License, Version 2.0, refer to LICENSE.txt

// Expectation-maximization for the Markov chain mixture.
//
// The E-step computes posterior cluster memberships with log-sum-exp; the
// M-step re-estimates p, f_i and T_i in closed form from posterior-weighted
// start and transition counts. Iteration stops once the corpus
// log-likelihood improves by less than epsilon between consecutive steps.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mixmc/model.hpp"

namespace mixmc {

/// N x K matrix of posterior probabilities; every row sums to 1.
class PosteriorMatrix {
 public:
  PosteriorMatrix() = default;
  /// Throws InvalidInput if an entry is outside [0,1] or a row sum is off by
  /// more than kSumTolerance.
  explicit PosteriorMatrix(Matrix g);

  std::size_t num_sequences() const { return g_.rows(); }
  std::size_t num_clusters() const { return g_.cols(); }
  double operator()(std::size_t s, std::size_t i) const { return g_(s, i); }
  std::span<const double> row(std::size_t s) const { return g_.row(s); }
  const Matrix& matrix() const { return g_; }

 private:
  Matrix g_;
};

enum class InitMode { kUniformJitter, kRandom };

std::string to_string(InitMode mode);
/// Accepts "uniform-jitter" and "random"; throws InvalidInput otherwise.
InitMode parse_init_mode(const std::string& text);

struct EmConfig {
  std::size_t num_clusters = 4;
  double epsilon = 1e-4;  // on the log-likelihood scale
  int max_iters = 500;
  double alpha = 1e-6;    // additive pseudo-count for start/transition counts
  InitMode init = InitMode::kUniformJitter;
  std::uint64_t seed = 0;
  double jitter_scale = 0.01;
  unsigned threads = 1;

  /// Throws InvalidInput on K < 1, epsilon <= 0, max_iters < 1, alpha < 0,
  /// jitter_scale outside [0,1) or threads < 1.
  void validate() const;
};

struct FitResult {
  MixtureModel model;
  /// Posteriors that produced `model` in the final M-step.
  PosteriorMatrix posteriors;
  /// Log-likelihood of the starting model, before any iteration.
  LogLikelihood initial_log_likelihood;
  /// One entry per iteration, evaluated after its M-step.
  std::vector<LogLikelihood> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Snapshot handed to a fit observer after each iteration.
struct IterationState {
  int iteration;
  const PosteriorMatrix& posteriors;
  const MixtureModel& model;
  LogLikelihood log_likelihood;
};

using FitObserver = std::function<void(const IterationState&)>;

/// Starting model. Uniform-jitter multiplies every entry of the uniform f_i and
/// T_i by (1 + jitter_scale * u), u ~ U[-1,1), then renormalizes; p stays 1/K.
/// With jitter_scale == 0 the result is exactly uniform. Random mode draws p,
/// each f_i and each row of T_i from the flat Dirichlet.
MixtureModel initialize(const EmConfig& config, const CategorySet& categories);

/// g_{s,i} = p_i P(s|theta_i) / sum_j p_j P(s|theta_j).
/// Throws DegeneracyError if every cluster gives some sequence probability 0.
PosteriorMatrix e_step(const MixtureModel& model, const SequenceDataset& data,
                       unsigned threads = 1);

/// Closed-form re-estimation from posterior-weighted counts plus alpha.
/// Rows (or f) whose smoothed total is zero are set to uniform.
MixtureModel m_step(const SequenceDataset& data, const PosteriorMatrix& posteriors,
                    double alpha, unsigned threads = 1);

/// Runs EM from initialize(config, ...).
FitResult fit(const SequenceDataset& data, const EmConfig& config,
              const FitObserver& observer = {});

/// Runs EM from a caller-supplied starting model; config.num_clusters, init,
/// seed and jitter_scale are ignored.
FitResult fit_from(const SequenceDataset& data, MixtureModel start, const EmConfig& config,
                   const FitObserver& observer = {});

}  // namespace mixmc
