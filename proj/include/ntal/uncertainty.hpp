#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ntal/error.hpp"
#include "ntal/forest.hpp"

namespace ntal {

// Informativeness measures over a single posterior. All use the natural log.

/// -sum p_i ln p_i with 0 ln 0 = 0. Lies in [0, ln n]. Summed in sorted
/// order so permuted distributions score bit-identically.
inline double entropy(const ProbabilityDistribution& p) {
  validate(p);
  auto sorted = p.probs;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double h = 0.0;
  for (double v : sorted)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(h, 0.0);
}

/// 1 - max p.
inline double least_confidence(const ProbabilityDistribution& p) {
  validate(p);
  return 1.0 - *std::max_element(p.probs.begin(), p.probs.end());
}

/// Top-1 minus top-2 probability. Smaller means more uncertain.
inline double margin(const ProbabilityDistribution& p) {
  validate(p);
  if (p.size() < 2) throw Error(Errc::invalid_distribution, "margin needs at least two classes");
  double first = -1.0, second = -1.0;
  for (double v : p.probs) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

// Committee disagreement.

/// Entropy of the committee's hard-vote histogram.
inline double vote_entropy(std::span<const ClassIndex> votes, std::size_t n_classes) {
  if (votes.size() < 2) throw Error(Errc::empty_committee, "vote entropy needs at least two members");
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto v : votes) {
    if (v >= n_classes) throw Error(Errc::class_out_of_range, "vote for class " + std::to_string(v));
    ++counts[v];
  }
  std::sort(counts.begin(), counts.end(), std::greater<>());
  const double c = static_cast<double>(votes.size());
  double h = 0.0;
  for (auto n : counts)
    if (n > 0) {
      const double q = static_cast<double>(n) / c;
      h -= q * std::log(q);
    }
  return std::max(h, 0.0);
}

/// Mean over members of KL(P_m || P_mean), the consensus being the
/// element-wise average of member posteriors.
inline double kl_disagreement(std::span<const ProbabilityDistribution> members) {
  if (members.size() < 2) throw Error(Errc::empty_committee, "KL disagreement needs at least two members");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) throw Error(Errc::length_mismatch, "member distributions differ in length");
    validate(m);
  }
  // Averaging identical members is not exact; unanimity is exactly zero.
  if (std::all_of(members.begin(), members.end(), [&](const auto& m) { return m.probs == members.front().probs; }))
    return 0.0;
  std::vector<double> consensus(n, 0.0);
  for (const auto& m : members)
    for (std::size_t i = 0; i < n; ++i) consensus[i] += m.probs[i];
  for (auto& v : consensus) v /= static_cast<double>(members.size());

  double total = 0.0;
  for (const auto& m : members) {
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (m.probs[i] > 0.0) kl += m.probs[i] * std::log(m.probs[i] / consensus[i]);
    total += kl;
  }
  return std::max(total / static_cast<double>(members.size()), 0.0);
}

// Representativeness.

enum class Similarity {
  cosine,  // (1 + cos) / 2 on standardized features; zero vectors score 0.5
  rbf,     // exp(-gamma * squared Euclidean distance)
};

/// Mean similarity of each point to every point of the pool, itself included.
inline std::vector<double> density_factors(std::span<const std::vector<double>> pool,
                                           Similarity kind = Similarity::cosine, double rbf_gamma = 1.0) {
  const std::size_t n = pool.size();
  std::vector<double> sum(n, 0.0);
  if (kind == Similarity::cosine) {
    std::vector<std::vector<double>> unit(n);
    std::vector<char> zero(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double norm = 0.0;
      for (double v : pool[i]) norm += v * v;
      norm = std::sqrt(norm);
      zero[i] = norm == 0.0;
      unit[i] = pool[i];
      if (!zero[i])
        for (auto& v : unit[i]) v /= norm;
    }
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += zero[i] ? 0.5 : 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0.5;
        if (!zero[i] && !zero[j]) {
          double dot = 0.0;
          for (std::size_t f = 0; f < unit[i].size(); ++f) dot += unit[i][f] * unit[j][f];
          s = (1.0 + std::clamp(dot, -1.0, 1.0)) / 2.0;
        }
        sum[i] += s;
        sum[j] += s;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < pool[i].size(); ++f) {
          const double d = pool[i][f] - pool[j][f];
          d2 += d * d;
        }
        const double s = std::exp(-rbf_gamma * d2);
        sum[i] += s;
        sum[j] += s;
      }
    }
  }
  for (auto& s : sum) s /= static_cast<double>(n);
  return sum;
}

/// base(x) * density(x)^beta.
inline std::vector<double> information_density(std::span<const double> base_scores,
                                               std::span<const std::vector<double>> pool_features, double beta,
                                               Similarity kind = Similarity::cosine, double rbf_gamma = 1.0) {
  if (pool_features.empty()) throw Error(Errc::empty_pool, "density needs a non-empty pool");
  if (base_scores.size() != pool_features.size())
    throw Error(Errc::length_mismatch, "scores and pool differ in length");
  if (!(beta >= 0.0)) throw Error(Errc::invalid_params, "beta must be >= 0");
  std::vector<double> out(base_scores.begin(), base_scores.end());
  if (beta == 0.0) return out;
  const auto factor = density_factors(pool_features, kind, rbf_gamma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(factor[i], beta);
  return out;
}

}  // namespace ntal
