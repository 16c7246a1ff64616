// Apache License, Version 2.0, refer to LICENSE.txt

// Random valid models and datasets for property tests.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "mixmc/model.hpp"

namespace gen {

inline std::vector<std::string> category_names(std::size_t c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < c; ++i) names.push_back("cat" + std::to_string(i));
  return names;
}

inline std::vector<double> simplex(std::size_t n, std::mt19937_64& rng, double floor = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) sum += (x = e(rng) + floor);
  for (double& x : v) x /= sum;
  return v;
}

// floor > 0 keeps every entry strictly positive, hence an ergodic chain.
inline mixmc::ChainParams chain(std::size_t c, std::mt19937_64& rng, double floor = 0.0) {
  mixmc::Matrix t(c, c);
  for (std::size_t j = 0; j < c; ++j) {
    auto row = simplex(c, rng, floor);
    for (std::size_t k = 0; k < c; ++k) t(j, k) = row[k];
  }
  return mixmc::ChainParams(simplex(c, rng, floor), std::move(t));
}

inline mixmc::MixtureModel model(std::size_t k, std::size_t c, std::mt19937_64& rng,
                                 double floor = 0.0) {
  std::vector<mixmc::ChainParams> chains;
  for (std::size_t i = 0; i < k; ++i) chains.push_back(chain(c, rng, floor));
  return mixmc::MixtureModel(mixmc::CategorySet(category_names(c)), simplex(k, rng, floor),
                             std::move(chains));
}

inline mixmc::Sequence sequence(std::size_t c, std::size_t length, std::mt19937_64& rng,
                                std::string user = "u") {
  std::uniform_int_distribution<mixmc::State> pick(0, static_cast<mixmc::State>(c - 1));
  mixmc::Sequence s{std::move(user), "city", {2010, 1}, {}};
  for (std::size_t m = 0; m < length; ++m) s.states.push_back(pick(rng));
  return s;
}

inline mixmc::SequenceDataset dataset(std::size_t c, std::size_t n, std::size_t min_len,
                                      std::size_t max_len, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::vector<mixmc::Sequence> seqs;
  for (std::size_t i = 0; i < n; ++i)
    seqs.push_back(sequence(c, len(rng), rng, "u" + std::to_string(i)));
  return mixmc::SequenceDataset(mixmc::CategorySet(category_names(c)), std::move(seqs));
}

}  // namespace gen
