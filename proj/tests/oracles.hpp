// Apache License, Version 2.0, refer to LICENSE.txt

// Independent reference computations for tests. Nothing here calls into the
// log-space code paths it is used to check.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mixmc/model.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// Plain product f(s1) T(s1,s2) ... in linear scale.
inline double sequence_prob(const Vec& f, const Mat& t, const std::vector<mixmc::State>& s) {
  double p = f[s[0]];
  for (std::size_t m = 1; m < s.size(); ++m) p *= t[s[m - 1]][s[m]];
  return p;
}

struct CountMle {
  Vec f;
  Mat t;
};

// Count starts and transitions of the given sequences one by one, then divide
// each row by its total. Rows without observations become uniform.
inline CountMle count_and_normalize(const std::vector<std::vector<mixmc::State>>& seqs,
                                    std::size_t c) {
  CountMle out{Vec(c, 0.0), Mat(c, Vec(c, 0.0))};
  for (const auto& s : seqs) {
    out.f[s[0]] += 1.0;
    for (std::size_t m = 1; m < s.size(); ++m) out.t[s[m - 1]][s[m]] += 1.0;
  }
  auto normalize = [c](Vec& row) {
    double total = 0.0;
    for (double x : row) total += x;
    for (double& x : row) x = total > 0 ? x / total : 1.0 / static_cast<double>(c);
  };
  normalize(out.f);
  for (auto& row : out.t) normalize(row);
  return out;
}

// Solves pi (T - I) = 0, sum(pi) = 1 by Gaussian elimination with partial pivoting.
inline Vec stationary_by_linear_solve(const Mat& t) {
  const std::size_t c = t.size();
  // Rows of A are equations: for each k, sum_j pi_j (T(j,k) - [j==k]) = 0;
  // the last equation is replaced by sum_j pi_j = 1.
  Mat a(c, Vec(c + 1, 0.0));
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t j = 0; j < c; ++j) a[k][j] = t[j][k] - (j == k ? 1.0 : 0.0);
  for (std::size_t j = 0; j < c; ++j) a[c - 1][j] = 1.0;
  a[c - 1][c] = 1.0;
  for (std::size_t col = 0; col < c; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < c; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < c; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t x = col; x <= c; ++x) a[r][x] -= factor * a[col][x];
    }
  }
  Vec pi(c);
  for (std::size_t j = 0; j < c; ++j) pi[j] = a[j][c] / a[j][j];
  return pi;
}

inline Mat to_rows(const mixmc::Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t x = 0; x < m.cols(); ++x) out[r][x] = m(r, x);
  return out;
}

}  // namespace oracle
