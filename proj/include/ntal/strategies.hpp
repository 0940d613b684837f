#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntal/error.hpp"
#include "ntal/forest.hpp"
#include "ntal/lal.hpp"
#include "ntal/pool.hpp"
#include "ntal/rng.hpp"
#include "ntal/uncertainty.hpp"

namespace ntal {

enum class StrategyKind { entropy, least_confidence, margin, qbc_vote_entropy, qbc_kl, density, lal, random };

inline constexpr std::array all_strategy_kinds{
    StrategyKind::entropy, StrategyKind::least_confidence, StrategyKind::margin, StrategyKind::qbc_vote_entropy,
    StrategyKind::qbc_kl,  StrategyKind::density,           StrategyKind::lal,    StrategyKind::random};

constexpr std::string_view to_string(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::entropy: return "entropy";
    case StrategyKind::least_confidence: return "least_confidence";
    case StrategyKind::margin: return "margin";
    case StrategyKind::qbc_vote_entropy: return "qbc_vote_entropy";
    case StrategyKind::qbc_kl: return "qbc_kl";
    case StrategyKind::density: return "density";
    case StrategyKind::lal: return "lal";
    case StrategyKind::random: return "random";
  }
  return "unknown";
}

inline std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
  for (auto k : all_strategy_kinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

constexpr bool is_committee_kind(StrategyKind k) noexcept {
  return k == StrategyKind::qbc_vote_entropy || k == StrategyKind::qbc_kl;
}

/// Margin is the only score where smaller means more informative.
constexpr bool minimizes(StrategyKind k) noexcept { return k == StrategyKind::margin; }

struct StrategyConfig {
  StrategyKind kind = StrategyKind::entropy;
  double beta = 1.0;                                   // density exponent
  StrategyKind base_informativeness = StrategyKind::entropy;  // scored inside density
  Similarity similarity = Similarity::cosine;
  double rbf_gamma = 1.0;
  std::size_t committee_size = 5;
  LalParams lal_params{};
  std::uint64_t seed = 0;
  /// Pre-trained LAL regressor; loops train one from lal_params when unset.
  std::shared_ptr<const LalRegressor> lal_regressor;

  void validate() const {
    if (!(beta >= 0.0)) throw Error(Errc::invalid_params, "beta must be >= 0");
    if (is_committee_kind(kind) && committee_size < 2)
      throw Error(Errc::invalid_committee_size, "QBC needs committee_size >= 2");
    if (kind == StrategyKind::density &&
        (base_informativeness == StrategyKind::density || base_informativeness == StrategyKind::random))
      throw Error(Errc::invalid_params, "density base must be an informativeness measure");
    if (kind == StrategyKind::lal) lal_params.validate();
  }
};

/// Models a strategy may consult. Unused members may stay null.
struct QueryContext {
  const ForestModel* model = nullptr;
  const Committee* committee = nullptr;
  const LalRegressor* lal = nullptr;
};

using ScoreVector = std::vector<double>;

namespace detail {

inline const ForestModel& need_model(const QueryContext& ctx, StrategyKind k) {
  if (!ctx.model) throw Error(Errc::invalid_params, std::string(to_string(k)) + " needs a fitted model");
  return *ctx.model;
}

inline const Committee& need_committee(const QueryContext& ctx, StrategyKind k) {
  if (!ctx.committee || ctx.committee->size() < 2)
    throw Error(Errc::empty_committee, std::string(to_string(k)) + " needs a committee of at least two");
  return *ctx.committee;
}

/// Per-instance informativeness for the single-model and committee kinds.
inline double instance_score(StrategyKind kind, const QueryContext& ctx, std::span<const double> x) {
  switch (kind) {
    case StrategyKind::entropy: return entropy(need_model(ctx, kind).predict_proba(x));
    case StrategyKind::least_confidence: return least_confidence(need_model(ctx, kind).predict_proba(x));
    case StrategyKind::margin: return margin(need_model(ctx, kind).predict_proba(x));
    case StrategyKind::qbc_vote_entropy: {
      const auto& c = need_committee(ctx, kind);
      return vote_entropy(c.votes(x), c.members.front().n_classes());
    }
    case StrategyKind::qbc_kl: return kl_disagreement(need_committee(ctx, kind).member_probs(x));
    default: throw Error(Errc::invalid_params, "not a per-instance measure: " + std::string(to_string(kind)));
  }
}

}  // namespace detail

/// Scores aligned with pool.unlabeled().
inline ScoreVector score_pool(const StrategyConfig& config, const QueryContext& ctx, const PoolState& pool) {
  config.validate();
  const auto& data = pool.dataset();
  const auto& U = pool.unlabeled();
  ScoreVector scores(U.size());

  switch (config.kind) {
    case StrategyKind::random: {
      // Uniform keys: the top-k of i.i.d. keys is a uniform k-subset.
      Rng rng(config.seed);
      for (auto& s : scores) s = uniform01(rng);
      break;
    }
    case StrategyKind::density: {
      const auto base_kind = config.base_informativeness;
      for (std::size_t i = 0; i < U.size(); ++i) {
        double s = detail::instance_score(base_kind, ctx, data[U[i]].features);
        scores[i] = minimizes(base_kind) ? 1.0 - s : s;
      }
      std::vector<const FlowRecord*> rows;
      for (const auto* set : {&pool.labeled(), &U})
        for (auto i : *set) rows.push_back(&data[i]);
      const auto scaler = fit_scaler(rows, data.n_features());
      std::vector<std::vector<double>> features;
      features.reserve(U.size());
      for (auto i : U) features.push_back(scaler.apply(data[i].features));
      scores = information_density(scores, features, config.beta, config.similarity, config.rbf_gamma);
      break;
    }
    case StrategyKind::lal: {
      const auto& model = detail::need_model(ctx, config.kind);
      if (!ctx.lal) throw Error(Errc::untrained_regressor, "lal needs a trained regressor");
      const LabeledSummary summary{pool.labeled().size(), pool.labeled_class_counts()};
      for (std::size_t i = 0; i < U.size(); ++i) scores[i] = lal_score(*ctx.lal, model, summary, data[U[i]].features);
      break;
    }
    default:
      for (std::size_t i = 0; i < U.size(); ++i) scores[i] = detail::instance_score(config.kind, ctx, data[U[i]].features);
  }
  return scores;
}

/// Positions of the k best scores; ties go to the lower position.
inline std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k, bool minimize) {
  if (k > scores.size()) throw Error(Errc::batch_too_large, "k exceeds number of scores");
  std::vector<std::size_t> pos(scores.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return minimize ? scores[a] < scores[b] : scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k), pos.end(), better);
  pos.resize(k);
  return pos;
}

/// k dataset indices from U, best first.
inline std::vector<std::size_t> select_batch(const StrategyConfig& config, const QueryContext& ctx,
                                             const PoolState& pool, std::size_t k) {
  const auto& U = pool.unlabeled();
  if (U.empty()) throw Error(Errc::empty_pool, "no unlabeled instances");
  if (k < 1) throw Error(Errc::invalid_params, "batch size must be >= 1");
  if (k > U.size())
    throw Error(Errc::batch_too_large,
                "batch " + std::to_string(k) + " exceeds " + std::to_string(U.size()) + " unlabeled");
  auto scores = score_pool(config, ctx, pool);
  for (double& s : scores) {
    if (!std::isfinite(s)) throw Error(Errc::invalid_distribution, "non-finite query score");
    // Scores a few ulps apart (e.g. 7/9 - 2/9 vs 6/9 - 1/9) rank as ties.
    s = std::ldexp(std::round(std::ldexp(s, 40)), -40);
  }
  auto picked = top_k(scores, k, minimizes(config.kind));
  for (auto& p : picked) p = U[p];
  return picked;
}

}  // namespace ntal
