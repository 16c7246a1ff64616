// Apache License, Version 2.0, refer to LICENSE.txt

// Core types of the Markov chain mixture: category vocabulary, observed
// sequences, per-cluster chain parameters and the mixture itself, together
// with the likelihood evaluations and the stationary distribution.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mixmc {

/// Tolerance used when validating that probability vectors sum to one.
inline constexpr double kSumTolerance = 1e-10;

using State = std::uint32_t;

/// Ordered vocabulary of category labels. Index i <-> names()[i].
class CategorySet {
 public:
  /// Throws InvalidInput unless there are at least two unique, non-empty names.
  explicit CategorySet(std::vector<std::string> names);

  /// Food, Art & Entertainment, College & Education, Home/Work, Nightlife,
  /// Parks & Outdoors, Shops, Travel.
  static CategorySet weeplaces();

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<State> index_of(std::string_view name) const;

  bool operator==(const CategorySet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, State> index_;
};

/// ISO-8601 week: weeks start on Monday, week 1 holds the year's first Thursday.
struct IsoWeek {
  int year = 0;
  int week = 0;

  auto operator<=>(const IsoWeek&) const = default;

  /// "YYYY-Www"
  std::string to_string() const;
  /// Throws InvalidInput on anything other than "YYYY-Www".
  static IsoWeek parse(std::string_view text);
};

struct Sequence {
  std::string user;
  std::string city;
  IsoWeek week;
  std::vector<State> states;

  std::size_t length() const { return states.size(); }
};

/// A corpus of sequences over one category vocabulary.
class SequenceDataset {
 public:
  /// Throws InvalidInput if any sequence is empty or holds an index >= C.
  SequenceDataset(CategorySet categories, std::vector<Sequence> sequences);

  const CategorySet& categories() const { return categories_; }
  const std::vector<Sequence>& sequences() const { return sequences_; }
  std::size_t size() const { return sequences_.size(); }
  bool empty() const { return sequences_.empty(); }
  const Sequence& operator[](std::size_t i) const { return sequences_[i]; }
  auto begin() const { return sequences_.begin(); }
  auto end() const { return sequences_.end(); }

 private:
  CategorySet categories_;
  std::vector<Sequence> sequences_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Parameters of one stationary Markov chain: initial distribution f and
/// row-stochastic transition matrix T. Immutable; log tables are cached.
class ChainParams {
 public:
  /// Throws InvalidInput unless f and every row of T are probability vectors
  /// (entries in [0,1], sums within kSumTolerance of 1) of matching size.
  ChainParams(std::vector<double> initial, Matrix transition);

  /// Uniform f and T over `num_categories` states.
  static ChainParams uniform(std::size_t num_categories);

  std::size_t num_categories() const { return initial_.size(); }
  const std::vector<double>& initial() const { return initial_; }
  const Matrix& transition() const { return transition_; }

  double log_initial(State j) const { return log_initial_[j]; }
  double log_transition(State from, State to) const { return log_transition_(from, to); }

  bool operator==(const ChainParams& other) const {
    return initial_ == other.initial_ && transition_ == other.transition_;
  }

 private:
  std::vector<double> initial_;
  Matrix transition_;
  std::vector<double> log_initial_;
  Matrix log_transition_;
};

/// Mixture of K chains with mixing distribution p.
class MixtureModel {
 public:
  /// Throws InvalidInput unless p is a probability vector with one entry per
  /// chain and every chain has categories.size() states.
  MixtureModel(CategorySet categories, std::vector<double> mixing,
               std::vector<ChainParams> clusters);

  const CategorySet& categories() const { return categories_; }
  std::size_t num_clusters() const { return clusters_.size(); }
  std::size_t num_categories() const { return categories_.size(); }
  const std::vector<double>& mixing() const { return mixing_; }
  const std::vector<ChainParams>& clusters() const { return clusters_; }
  const ChainParams& cluster(std::size_t i) const { return clusters_.at(i); }

 private:
  CategorySet categories_;
  std::vector<double> mixing_;
  std::vector<ChainParams> clusters_;
};

/// Natural-log likelihood of a corpus.
struct LogLikelihood {
  double value = 0.0;

  auto operator<=>(const LogLikelihood&) const = default;
};

/// log P(s | chain) = log f(s_1) + sum_m log T(s_{m-1}, s_m).
/// Returns -inf when a factor is zero. Throws InvalidInput on dimension mismatch.
double sequence_log_prob(const ChainParams& chain, const Sequence& s);

/// log sum_i p_i P(s | chain_i), evaluated with log-sum-exp.
double mixture_log_prob(const MixtureModel& model, const Sequence& s);

/// Sum of mixture_log_prob over the corpus. With threads > 1 the corpus is
/// split into contiguous blocks whose partial sums are added in block order.
/// Throws InvalidInput on an empty corpus.
LogLikelihood corpus_log_likelihood(const MixtureModel& model,
                                    const SequenceDataset& data,
                                    unsigned threads = 1);

/// Stationary distribution by power iteration from the uniform vector.
///
/// Returns pi with max|pi T - pi| <= tol and sum(pi) = 1. Iteration also
/// continues until the estimated distance to the fixed point (from the
/// observed contraction rate) is below tol. A chain whose
/// transition graph is reducible or periodic has no limit from every start,
/// so it is rejected with ConvergenceError before iterating; so is a chain
/// that does not reach tol within max_iters.
std::vector<double> stationary_distribution(const ChainParams& chain,
                                            double tol = 1e-10,
                                            int max_iters = 10000);

/// log(sum_i exp(x_i)); -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> x);

}  // namespace mixmc
