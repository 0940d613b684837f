#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/error.hpp"
#include "ntal/forest.hpp"
#include "ntal/rng.hpp"
#include "ntal/uncertainty.hpp"

namespace ntal {

// Learning active learning: a regressor maps a (model, labeled set,
// candidate) state to the expected drop in test error from labeling the
// candidate. It is trained by Monte-Carlo simulation on small synthetic tasks.

inline constexpr std::size_t lal_feature_count = 8;
using LalFeatures = std::array<double, lal_feature_count>;

struct LalParams {
  std::size_t mc_rounds = 40;
  std::size_t candidates_per_round = 12;
  std::size_t state_feature_length = lal_feature_count;
  ForestParams regressor = regressor_defaults();
  /// Classifier used inside each simulated task.
  ForestParams simulation = simulation_defaults();
  std::uint64_t seed = 0;
  /// Test hook: replace every simulated target with this value.
  std::optional<double> constant_target;

  static ForestParams regressor_defaults() {
    ForestParams p;
    p.n_trees = 50;
    p.min_samples_split = 5;
    return p;
  }
  static ForestParams simulation_defaults() {
    ForestParams p;
    p.n_trees = 25;
    return p;
  }

  void validate() const {
    if (mc_rounds < 1) throw Error(Errc::invalid_params, "LAL needs mc_rounds >= 1");
    if (candidates_per_round < 1) throw Error(Errc::invalid_params, "LAL needs candidates_per_round >= 1");
    if (state_feature_length != lal_feature_count)
      throw Error(Errc::invalid_params, "LAL state vectors have exactly 8 entries");
    regressor.validate();
    simulation.validate();
  }
};

struct LabeledSummary {
  std::size_t labeled_size = 0;
  std::vector<std::size_t> class_counts;

  static LabeledSummary of(const Dataset& labeled) {
    LabeledSummary s{labeled.size(), std::vector<std::size_t>(labeled.n_classes(), 0)};
    for (const auto& r : labeled.records()) ++s.class_counts[r.label];
    return s;
  }

  double balance_entropy() const {
    double total = 0.0;
    for (auto c : class_counts) total += static_cast<double>(c);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (auto c : class_counts)
      if (c > 0) {
        const double q = static_cast<double>(c) / total;
        h -= q * std::log(q);
      }
    return h;
  }
};

/// State vector: max probability, margin, entropy, across-tree vote variance,
/// labeled-set size, labeled class-balance entropy, mean leaf depth reached,
/// candidate L2 norm.
inline LalFeatures lal_state_features(const ForestModel& model, const LabeledSummary& labeled,
                                      std::span<const double> candidate) {
  const auto p = model.predict_proba(candidate);
  double vote_var = 0.0;
  for (double q : p.probs) vote_var += q * (1.0 - q);
  vote_var /= static_cast<double>(p.size());
  double norm = 0.0;
  for (double v : candidate) norm += v * v;
  return {*std::max_element(p.probs.begin(), p.probs.end()),
          margin(p),
          entropy(p),
          vote_var,
          static_cast<double>(labeled.labeled_size),
          labeled.balance_entropy(),
          model.mean_leaf_depth(candidate),
          std::sqrt(norm)};
}

class LalRegressor {
 public:
  LalRegressor() = default;
  LalRegressor(RegressionForest forest, std::size_t n_pairs) : forest_(std::move(forest)), n_pairs_(n_pairs) {}

  bool trained() const noexcept { return forest_.trained(); }
  std::size_t training_pairs() const noexcept { return n_pairs_; }

  double predict(const LalFeatures& state) const {
    if (!trained()) throw Error(Errc::untrained_regressor, "LAL regressor has not been trained");
    return forest_.predict(state);
  }

 private:
  RegressionForest forest_;
  std::size_t n_pairs_ = 0;
};

struct LalTrainingSet {
  std::vector<std::vector<double>> states;
  std::vector<double> targets;
};

namespace detail {

inline double error_rate(const ForestModel& model, const Dataset& test) {
  return 1.0 - evaluate_accuracy(model, test);
}

}  // namespace detail

/// Monte-Carlo pairs: per round, a random small blob task, a random labeled
/// subset, and for each sampled candidate the observed test-error reduction
/// from adding it with its true label.
inline LalTrainingSet simulate_lal_pairs(const LalParams& params) {
  params.validate();
  LalTrainingSet out;
  for (std::size_t round = 0; round < params.mc_rounds; ++round) {
    const auto round_seed = derive_seed(params.seed, round);
    Rng rng(round_seed);
    SyntheticSpec spec;
    spec.n_classes = 2 + static_cast<std::size_t>(uniform_below(rng, 2));
    spec.n_features = 2 + static_cast<std::size_t>(uniform_below(rng, 4));
    spec.per_class = 30 + static_cast<std::size_t>(uniform_below(rng, 30));
    spec.class_mean_separation = 1.0 + 3.0 * uniform01(rng);
    spec.noise_stddev = 1.0;
    spec.seed = derive_seed(round_seed, 1);
    const auto raw = generate_synthetic(spec);
    const auto task = standardize(raw).apply(raw);

    const auto perm = permutation(task.size(), derive_seed(round_seed, 2));
    const std::span<const std::size_t> all(perm);
    const std::size_t n_test = task.size() / 2;
    const auto test = task.select(all.first(n_test));
    const auto pool = all.subspan(n_test);

    const std::size_t max_labeled = std::min<std::size_t>(30, pool.size() - params.candidates_per_round);
    const std::size_t n_labeled =
        spec.n_classes + static_cast<std::size_t>(uniform_below(rng, max_labeled - spec.n_classes + 1));
    std::vector<std::size_t> labeled_idx(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_labeled));
    const auto labeled = task.select(labeled_idx);
    const auto fit_seed = derive_seed(round_seed, 3);
    const auto model = fit_forest(labeled, params.simulation, fit_seed);
    const double base_error = detail::error_rate(model, test);
    const auto summary = LabeledSummary::of(labeled);

    for (std::size_t c = 0; c < params.candidates_per_round; ++c) {
      const std::size_t cand = pool[n_labeled + c];
      const auto state = lal_state_features(model, summary, task[cand].features);
      double target;
      if (params.constant_target) {
        target = *params.constant_target;
      } else {
        auto grown = labeled_idx;
        grown.push_back(cand);
        const auto refit = fit_forest(task.select(grown), params.simulation, fit_seed);
        target = base_error - detail::error_rate(refit, test);
      }
      out.states.emplace_back(state.begin(), state.end());
      out.targets.push_back(target);
    }
  }
  return out;
}

inline LalRegressor train_lal_regressor(const LalParams& params) {
  const auto pairs = simulate_lal_pairs(params);
  auto forest = fit_regression_forest(pairs.states, pairs.targets, params.regressor, derive_seed(params.seed, 0xA1));
  return LalRegressor(std::move(forest), pairs.targets.size());
}

/// Predicted error reduction from labeling `candidate`. Larger is better.
inline double lal_score(const LalRegressor& regressor, const ForestModel& model, const LabeledSummary& labeled,
                        std::span<const double> candidate) {
  if (!regressor.trained()) throw Error(Errc::untrained_regressor, "LAL regressor has not been trained");
  return regressor.predict(lal_state_features(model, labeled, candidate));
}

}  // namespace ntal
