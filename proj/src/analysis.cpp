// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mixmc/error.hpp"

namespace mixmc {

std::vector<double> cluster_sizes_sequences(const PosteriorMatrix& posteriors) {
  const std::size_t n = posteriors.num_sequences();
  const std::size_t k = posteriors.num_clusters();
  std::vector<double> sums(k, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < k; ++i) sums[i] += posteriors(s, i);
  // Same operation order as m_step, so this equals the fitted p exactly.
  for (double& x : sums) x /= static_cast<double>(n);
  return sums;
}

std::vector<double> cluster_sizes_users(const SequenceDataset& data,
                                        const PosteriorMatrix& posteriors) {
  if (posteriors.num_sequences() != data.size())
    throw InvalidInput("posterior rows do not match the number of sequences");
  const std::size_t k = posteriors.num_clusters();
  std::vector<std::string> users;
  std::unordered_map<std::string, std::pair<std::vector<double>, std::size_t>> per_user;
  for (std::size_t s = 0; s < data.size(); ++s) {
    auto [it, inserted] =
        per_user.try_emplace(data[s].user, std::vector<double>(k, 0.0), std::size_t{0});
    if (inserted) users.push_back(data[s].user);
    for (std::size_t i = 0; i < k; ++i) it->second.first[i] += posteriors(s, i);
    ++it->second.second;
  }
  std::vector<double> out(k, 0.0);
  for (const auto& u : users) {
    const auto& [sums, count] = per_user[u];
    for (std::size_t i = 0; i < k; ++i) out[i] += sums[i] / static_cast<double>(count);
  }
  for (double& x : out) x /= static_cast<double>(users.size());
  return out;
}

std::vector<double> popularity_vector(const ChainParams& chain) {
  const Matrix& t = chain.transition();
  std::vector<double> sums(t.cols(), 0.0);
  for (std::size_t j = 0; j < t.rows(); ++j)
    for (std::size_t k = 0; k < t.cols(); ++k) sums[k] += t(j, k);
  return sums;
}

std::vector<RankedCategory> top_categories(const ChainParams& chain, const CategorySet& categories,
                                           std::size_t k) {
  if (chain.num_categories() != categories.size())
    throw InvalidInput("chain and category set disagree in size");
  if (k < 1 || k > categories.size()) throw InvalidInput("top-k must lie in [1, C]");
  const auto pop = popularity_vector(chain);
  std::vector<State> order(pop.size());
  std::iota(order.begin(), order.end(), State{0});
  std::stable_sort(order.begin(), order.end(), [&](State a, State b) { return pop[a] > pop[b]; });
  std::vector<RankedCategory> out;
  for (std::size_t r = 0; r < k; ++r)
    out.push_back({order[r], categories.name(order[r]), pop[order[r]]});
  return out;
}

std::vector<RankedTransition> top_transitions(const ChainParams& chain, std::size_t k) {
  const Matrix& t = chain.transition();
  std::vector<RankedTransition> all;
  for (std::size_t j = 0; j < t.rows(); ++j)
    for (std::size_t x = 0; x < t.cols(); ++x)
      all.push_back({static_cast<State>(j), static_cast<State>(x), t(j, x)});
  k = std::min(k, all.size());
  std::stable_sort(all.begin(), all.end(), [](const RankedTransition& a, const RankedTransition& b) {
    return a.probability > b.probability;
  });
  all.resize(k);
  return all;
}

Assignment assign_user(const MixtureModel& model, const std::vector<Sequence>& user_sequences) {
  if (user_sequences.empty()) throw InvalidInput("user has no sequences");
  const SequenceDataset data(model.categories(), user_sequences);
  const PosteriorMatrix g = e_step(model, data);
  const std::size_t k = model.num_clusters();
  std::vector<double> membership(k, 0.0);
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t i = 0; i < k; ++i) membership[i] += g(s, i);
  for (double& x : membership) x /= static_cast<double>(data.size());
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto best = static_cast<std::size_t>(
      std::max_element(membership.begin(), membership.end()) - membership.begin());
  return Assignment{best, std::move(membership)};
}

Forecast forecast_user(const MixtureModel& model, const std::vector<Sequence>& user_sequences,
                       double tol, int max_iters) {
  Assignment a = assign_user(model, user_sequences);
  auto pi = stationary_distribution(model.cluster(a.cluster), tol, max_iters);
  return Forecast{std::move(a), std::move(pi)};
}

ClusterReport make_report(const MixtureModel& model, const SequenceDataset& data,
                          const PosteriorMatrix& posteriors, std::size_t top_k) {
  if (!(model.categories() == data.categories()))
    throw InvalidInput("model and sequences use different categories");
  if (posteriors.num_sequences() != data.size())
    throw InvalidInput("posteriors have " + std::to_string(posteriors.num_sequences()) +
                       " rows, sequences file has " + std::to_string(data.size()));
  if (posteriors.num_clusters() != model.num_clusters())
    throw InvalidInput("posteriors have " + std::to_string(posteriors.num_clusters()) +
                       " columns, model has " + std::to_string(model.num_clusters()) +
                       " clusters");
  if (data.empty()) throw InvalidInput("empty dataset");

  const auto seqs = cluster_sizes_sequences(posteriors);
  const auto users = cluster_sizes_users(data, posteriors);
  std::vector<std::size_t> order(model.num_clusters());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seqs[a] > seqs[b]; });

  ClusterReport report{model.categories(), {}, {}, {}};
  for (std::size_t i : order) {
    const ChainParams& chain = model.cluster(i);
    report.p_seqs.push_back(seqs[i]);
    report.p_users.push_back(users[i]);
    report.clusters.push_back(ClusterSummary{
        i, seqs[i], users[i], chain, popularity_vector(chain),
        top_categories(chain, model.categories(), std::min(top_k, model.num_categories())),
        top_transitions(chain, top_k)});
  }
  return report;
}

namespace {

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string render_text(const ClusterReport& r) {
  std::ostringstream out;
  out << "Clusters: " << r.clusters.size() << "\n";
  out << "p_seqs  = (";
  for (std::size_t i = 0; i < r.p_seqs.size(); ++i) out << (i ? ", " : "") << fixed2(r.p_seqs[i]);
  out << ")\np_users = (";
  for (std::size_t i = 0; i < r.p_users.size(); ++i) out << (i ? ", " : "") << fixed2(r.p_users[i]);
  out << ")\n";

  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    const auto& cl = r.clusters[c];
    out << "\nCluster " << c + 1 << " (model index " << cl.source_index
        << "): p_seqs " << fixed2(cl.p_seqs) << ", p_users " << fixed2(cl.p_users) << "\n";
    out << "  initial probabilities:\n";
    for (std::size_t j = 0; j < r.categories.size(); ++j)
      out << "    " << r.categories.name(j) << ", " << fixed2(cl.chain.initial()[j]) << "\n";
    out << "  category, popularity:\n";
    for (const auto& t : cl.top_categories) out << "    " << t.name << ", " << fixed2(t.popularity) << "\n";
    out << "  top transitions:\n";
    for (const auto& t : cl.top_transitions)
      out << "    " << r.categories.name(t.from) << " - " << r.categories.name(t.to) << ", "
          << fixed2(t.probability) << "\n";
  }
  return out.str();
}

}  // namespace mixmc
