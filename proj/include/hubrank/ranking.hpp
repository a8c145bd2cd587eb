// Copyright 2026 The hubrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hubrank/errors.hpp"

namespace hubrank {

enum class TruthDirection { higher_better, lower_better };

inline TruthDirection parse_truth_direction(std::string_view s) {
  if (s == "higher_better" || s == "higher") return TruthDirection::higher_better;
  if (s == "lower_better" || s == "lower") return TruthDirection::lower_better;
  throw InputError("unknown truth direction '" + std::string(s) + "'");
}

inline std::string_view to_string(TruthDirection d) {
  return d == TruthDirection::higher_better ? "higher_better" : "lower_better";
}

/// Transferability scores S (higher is better) paired with measured transfer performance T.
struct ScorePair {
  std::vector<double> scores;
  std::vector<double> truths;
  TruthDirection truth_direction = TruthDirection::higher_better;
};

namespace detail {

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// Truths oriented so that larger means better.
inline std::vector<double> oriented_truths(const ScorePair& p) {
  if (p.scores.size() != p.truths.size())
    throw InputError("scores and truths have different lengths");
  if (p.scores.size() < 2) throw InputError("rank correlation needs at least two models");
  for (std::size_t i = 0; i < p.scores.size(); ++i)
    if (!std::isfinite(p.scores[i]) || !std::isfinite(p.truths[i]))
      throw InputError("rank correlation inputs must be finite");
  std::vector<double> t = p.truths;
  if (p.truth_direction == TruthDirection::lower_better)
    for (double& v : t) v = -v;
  return t;
}

/// One direction of the hyperbolic weighted tau: weights come from ranks in decreasing
/// order of `key`, ties in `key` broken by decreasing `other`, then by decreasing index.
inline double weighted_tau_ranked(std::span<const double> key, std::span<const double> other) {
  const std::size_t n = key.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    if (other[a] != other[b]) return other[a] > other[b];
    return a > b;
  });
  std::vector<double> weight(n);
  for (std::size_t r = 0; r < n; ++r) weight[order[r]] = 1.0 / (1.0 + static_cast<double>(r));

  double num = 0.0, total = 0.0, tied_key = 0.0, tied_other = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = weight[i] + weight[j];
      total += w;
      if (key[i] == key[j]) tied_key += w;
      if (other[i] == other[j]) tied_other += w;
      num += w * sgn(key[i] - key[j]) * sgn(other[i] - other[j]);
    }
  }
  const double denom = std::sqrt((total - tied_key) * (total - tied_other));
  if (!(denom > 0.0)) throw DomainError("weighted tau is undefined when either ranking is fully tied");
  return num / denom;
}

}  // namespace detail

/// Kendall's tau-a: average of sgn(T_i - T_j) sgn(S_i - S_j) over all pairs; ties count 0.
inline double kendall_tau(const ScorePair& pair) {
  const std::vector<double> t = detail::oriented_truths(pair);
  const auto& s = pair.scores;
  const std::size_t m = s.size();
  long long acc = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) acc += detail::sgn(t[i] - t[j]) * detail::sgn(s[i] - s[j]);
  return 2.0 * static_cast<double>(acc) / (static_cast<double>(m) * static_cast<double>(m - 1));
}

/// Weighted Kendall tau with additive hyperbolic weights 1/(1+r). Pairs involving
/// top-ranked models weigh more. The statistic is averaged over the ranking induced by S and
/// the one induced by T, with tau-b normalization for ties.
inline double weighted_tau(const ScorePair& pair) {
  const std::vector<double> t = detail::oriented_truths(pair);
  const std::span<const double> s(pair.scores);
  return 0.5 * (detail::weighted_tau_ranked(s, t) + detail::weighted_tau_ranked(t, s));
}

struct ScoredModel {
  std::string id;
  double score = 0.0;
};

struct RankReport {
  /// Model ids by descending score; equal scores in ascending id order.
  std::vector<std::string> ordering;
  std::vector<double> ordered_scores;
  std::optional<double> tau;
  std::optional<double> tau_w;
  /// Set when truths were given but tau_w could not be defined.
  std::optional<std::string> tau_w_error;

  std::vector<std::string> top_k(int k) const;
};

/// The k highest-scoring model ids. Defaults to three teachers.
inline std::vector<std::string> select_top_k(const RankReport& report, int k = 3) {
  if (k <= 0) throw InputError("top-k needs k >= 1");
  if (static_cast<std::size_t>(k) > report.ordering.size())
    throw InputError("top-k asks for " + std::to_string(k) + " models but the hub has " +
                     std::to_string(report.ordering.size()));
  return {report.ordering.begin(), report.ordering.begin() + k};
}

inline std::vector<std::string> RankReport::top_k(int k) const { return select_top_k(*this, k); }

inline RankReport rank_hub(const std::vector<ScoredModel>& models,
                           const std::optional<std::vector<double>>& truths = std::nullopt,
                           TruthDirection direction = TruthDirection::higher_better) {
  if (models.empty()) throw InputError("cannot rank an empty hub");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (!ids.insert(m.id).second) throw InputError("duplicate model id '" + m.id + "'");
    if (!std::isfinite(m.score)) throw InputError("model '" + m.id + "' has a non-finite score");
  }
  if (truths && truths->size() != models.size())
    throw InputError("truth count does not match model count");

  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (models[a].score != models[b].score) return models[a].score > models[b].score;
    return models[a].id < models[b].id;
  });

  RankReport rep;
  for (std::size_t i : order) {
    rep.ordering.push_back(models[i].id);
    rep.ordered_scores.push_back(models[i].score);
  }
  if (truths && models.size() >= 2) {
    ScorePair pair;
    pair.truths = *truths;
    pair.truth_direction = direction;
    for (const auto& m : models) pair.scores.push_back(m.score);
    rep.tau = kendall_tau(pair);
    try {
      rep.tau_w = weighted_tau(pair);
    } catch (const DomainError& e) {
      rep.tau_w_error = e.what();
    }
  }
  return rep;
}

}  // namespace hubrank
