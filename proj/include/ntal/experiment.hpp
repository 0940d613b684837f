#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ntal/config.hpp"
#include "ntal/dataset.hpp"
#include "ntal/engine.hpp"
#include "ntal/forest.hpp"
#include "ntal/lal.hpp"
#include "ntal/metrics.hpp"
#include "ntal/pool.hpp"
#include "ntal/rng.hpp"
#include "ntal/strategies.hpp"

namespace ntal {

inline constexpr std::string_view full_baseline_name = "full";

/// One report cell. time_seconds = train_seconds + select_seconds; the
/// full_* fields are the seed's baseline so tar and ttr can be recomputed.
struct ExperimentRow {
  std::string strategy;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double time_seconds = 0.0;
  double accuracy = 0.0;
  double tar = 0.0;
  double ttr = 0.0;
  double train_seconds = 0.0;
  double select_seconds = 0.0;
  double full_accuracy = 0.0;
  double full_train_seconds = 0.0;

  bool operator==(const ExperimentRow&) const = default;
};

inline void sort_rows(std::vector<ExperimentRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    return std::tie(a.strategy, a.fraction, a.seed) < std::tie(b.strategy, b.fraction, b.seed);
  });
}

inline Dataset load_source(const DatasetSource& source) {
  if (source.csv_path) return load_csv(*source.csv_path, source.csv);
  return generate_synthetic(source.synthetic);
}

/// Train/test split of one seed, with features standardized on the
/// training pool only.
struct PreparedSplit {
  Dataset data;
  std::vector<std::size_t> pool;
  std::vector<std::size_t> test;
};

inline PreparedSplit prepare_split(const Dataset& raw, double test_fraction, std::uint64_t seed,
                                   bool keep_order = false) {
  const auto perm = permutation(raw.size(), derive_seed(seed, 0x5EED));
  const auto n_test = subset_size(test_fraction, raw.size());
  if (n_test == 0 || n_test >= raw.size())
    throw Error(Errc::empty_dataset, "dataset of " + std::to_string(raw.size()) + " records is too small to split");
  PreparedSplit s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.pool.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  if (keep_order) {
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.pool.begin(), s.pool.end());
  }
  std::vector<const FlowRecord*> rows;
  for (auto i : s.pool) rows.push_back(&raw[i]);
  s.data = fit_scaler(rows, raw.n_features()).apply(raw);
  return s;
}

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Runs every (seed, fraction, strategy) cell. A cell's randomness derives
/// from its own coordinates only, so cells are independent of run order.
/// Label budgets are fractions of the training pool.
inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config, const Dataset& raw,
                                                 const Clock& clock = steady_clock_seconds()) {
  config.validate();
  std::vector<ExperimentRow> rows;

  for (const auto seed : config.seeds) {
    const auto split = prepare_split(raw, config.test_fraction, seed);
    const auto& data = split.data;
    const Oracle oracle(data, config.noise_rate, derive_seed(seed, 0x0AC1E));

    const auto full_train = data.select(split.pool);
    double t0 = clock();
    const auto full_model = fit_forest(full_train, config.learner, derive_seed(seed, 0xF011));
    const double full_time = clock() - t0;
    const double full_acc = evaluate_accuracy(full_model, data.select(split.test));
    // Clock resolution can report zero for tiny problems.
    const double full_time_safe = full_time > 0.0 ? full_time : 1e-9;

    if (config.include_full_baseline)
      rows.push_back({std::string(full_baseline_name), 1.0, seed, full_time_safe, full_acc, 1.0, 1.0, full_time_safe, 0.0,
                      full_acc, full_time_safe});

    std::shared_ptr<const LalRegressor> lal;
    double lal_time = 0.0;
    for (const auto& s : config.strategies)
      if (s.kind == StrategyKind::lal && !lal) {
        auto params = s.lal_params;
        params.seed = derive_seed(s.lal_params.seed, seed);
        t0 = clock();
        lal = std::make_shared<const LalRegressor>(train_lal_regressor(params));
        lal_time = clock() - t0;
      }

    for (const double fraction : config.fractions) {
      const auto budget = std::clamp<std::size_t>(subset_size(fraction, split.pool.size()), 1, split.pool.size());
      const auto n_init = std::clamp<std::size_t>(subset_size(config.seed_share, budget),
                                                  std::min<std::size_t>(2, budget), budget);
      const auto queries = budget - n_init;
      // Keyed on the fraction value, not its ladder position.
      const auto cell_seed = derive_seed(derive_seed(seed, 0xCE11), std::bit_cast<std::uint64_t>(fraction));

      // Same initial labeled set for every strategy in this cell.
      const auto order = permutation(split.pool.size(), derive_seed(cell_seed, 1));
      std::vector<std::size_t> initial, unlabeled;
      for (std::size_t k = 0; k < order.size(); ++k) (k < n_init ? initial : unlabeled).push_back(split.pool[order[k]]);

      StoppingCriteria stop = config.stop;
      stop.max_queries = std::min(stop.max_queries.value_or(queries), queries);
      const std::size_t batch =
          config.batch ? *config.batch
                       : std::max<std::size_t>(1, (queries + config.auto_iterations - 1) / config.auto_iterations);

      for (const auto& s : config.strategies) {
        const auto name = to_string(s.kind);
        auto strategy = s;
        strategy.seed = derive_seed(derive_seed(s.seed, detail::fnv1a(name)), cell_seed);
        if (s.kind == StrategyKind::lal) strategy.lal_regressor = lal;

        PoolState pool(data, initial, unlabeled, split.test);
        const auto history = run_pool_loop(pool, strategy, config.learner, oracle, batch, stop, cell_seed, clock);

        ExperimentRow row;
        row.strategy = std::string(name);
        row.fraction = fraction;
        row.seed = seed;
        row.train_seconds = history.training_seconds();
        row.select_seconds = history.selection_seconds() + (s.kind == StrategyKind::lal ? lal_time : 0.0);
        row.time_seconds = row.train_seconds + row.select_seconds;
        row.accuracy = history.final_accuracy();
        row.full_accuracy = full_acc;
        row.full_train_seconds = full_time_safe;
        row.tar = ntal::tar(row.accuracy, full_acc);
        row.ttr = ntal::ttr({row.train_seconds, row.select_seconds, full_time_safe});
        rows.push_back(std::move(row));
      }
    }
  }
  sort_rows(rows);
  return rows;
}

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_source(config.source));
}

// ---------------------------------------------------------------------------
// Stream scenario

struct StreamRunResult {
  std::uint64_t seed = 0;
  RunHistory history;
};

/// One stream run per seed. The stream is the training pool in dataset order,
/// so drift positions in synthetic data are preserved.
inline std::vector<StreamRunResult> run_stream_experiment(const ExperimentConfig& config, const Dataset& raw,
                                                          const Clock& clock = steady_clock_seconds()) {
  config.validate();
  std::vector<StreamRunResult> out;
  for (const auto seed : config.seeds) {
    const auto split = prepare_split(raw, config.test_fraction, seed, /*keep_order=*/true);
    const auto stream = split.data.select(split.pool);
    const auto test = split.data.select(split.test);
    const Oracle oracle(stream, config.noise_rate, derive_seed(seed, 0x0AC1E));
    auto loop = config.stream.loop;
    loop.max_label_budget = config.stream.budget ? *config.stream.budget
                                                 : subset_size(config.stream.budget_fraction, stream.size());
    out.push_back({seed, run_stream_loop(stream, test, loop, config.learner, oracle, config.stop,
                                         derive_seed(seed, 0x57EA), clock)});
  }
  return out;
}

}  // namespace ntal
