// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mixmc/em.hpp"
#include "mixmc/model.hpp"

namespace mixmc {

/// Column means of the posteriors: sum_s g_{s,i} / N.
std::vector<double> cluster_sizes_sequences(const PosteriorMatrix& posteriors);

/// Two-stage average: per-user mean posterior p^u, then the mean over users.
/// Every user counts once regardless of how many sequences they have.
std::vector<double> cluster_sizes_users(const SequenceDataset& data,
                                        const PosteriorMatrix& posteriors);

/// Column sums of T: how often each category is the next step.
std::vector<double> popularity_vector(const ChainParams& chain);

struct RankedCategory {
  State category;
  std::string name;
  double popularity;
};

/// The k most popular categories, descending; ties go to the lower index.
std::vector<RankedCategory> top_categories(const ChainParams& chain, const CategorySet& categories,
                                           std::size_t k);

struct RankedTransition {
  State from;
  State to;
  double probability;
};

/// The k largest entries of T, descending; ties go to the lower (from, to).
std::vector<RankedTransition> top_transitions(const ChainParams& chain, std::size_t k);

struct Assignment {
  std::size_t cluster;
  std::vector<double> membership;  // p^u
};

/// Averages the user's per-sequence posteriors and picks the argmax
/// (lowest index on ties). Throws InvalidInput on an empty list or a
/// dimension mismatch.
Assignment assign_user(const MixtureModel& model, const std::vector<Sequence>& user_sequences);

struct Forecast {
  Assignment assignment;
  std::vector<double> stationary;
};

/// assign_user followed by the stationary distribution of the chosen chain.
/// Propagates ConvergenceError.
Forecast forecast_user(const MixtureModel& model, const std::vector<Sequence>& user_sequences,
                       double tol = 1e-10, int max_iters = 10000);

struct ClusterSummary {
  std::size_t source_index;  // cluster label in the model
  double p_seqs;
  double p_users;
  ChainParams chain;
  std::vector<double> popularity;
  std::vector<RankedCategory> top_categories;
  std::vector<RankedTransition> top_transitions;
};

/// Clusters are listed by descending p_seqs (lower model index first on
/// ties); p_seqs and p_users follow the same order.
struct ClusterReport {
  CategorySet categories;
  std::vector<double> p_seqs;
  std::vector<double> p_users;
  std::vector<ClusterSummary> clusters;
};

/// Throws InvalidInput when the model, dataset and posteriors disagree in shape.
ClusterReport make_report(const MixtureModel& model, const SequenceDataset& data,
                          const PosteriorMatrix& posteriors, std::size_t top_k = 3);

/// Plain-text tables: cluster sizes, initial probabilities, and the top
/// categories per cluster as "category, popularity" rows (two decimals).
std::string render_text(const ClusterReport& report);

}  // namespace mixmc
