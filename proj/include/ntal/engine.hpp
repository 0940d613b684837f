#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/error.hpp"
#include "ntal/forest.hpp"
#include "ntal/pool.hpp"
#include "ntal/rng.hpp"
#include "ntal/strategies.hpp"

namespace ntal {

// ---------------------------------------------------------------------------
// Annotator

/// Dataset-backed annotator. With probability noise_rate the answer is a
/// uniformly drawn wrong class; the draw depends only on (seed, index).
class Oracle {
 public:
  Oracle(const Dataset& data, double noise_rate = 0.0, std::uint64_t seed = 0)
      : data_(&data), noise_rate_(noise_rate), seed_(seed) {
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
      throw Error(Errc::invalid_params, "oracle noise_rate must lie in [0, 1]");
  }

  const Dataset& dataset() const noexcept { return *data_; }
  double noise_rate() const noexcept { return noise_rate_; }

  ClassIndex label(std::size_t index) const {
    if (index >= data_->size())
      throw Error(Errc::index_out_of_range, "oracle index " + std::to_string(index));
    const ClassIndex truth = (*data_)[index].label;
    if (noise_rate_ == 0.0) return truth;
    Rng rng(derive_seed(seed_, index));
    if (!(uniform01(rng) < noise_rate_)) return truth;
    const auto other = static_cast<ClassIndex>(uniform_below(rng, data_->n_classes() - 1));
    return other >= truth ? other + 1 : other;
  }

 private:
  const Dataset* data_;
  double noise_rate_;
  std::uint64_t seed_;
};

inline ClassIndex oracle_label(const Oracle& oracle, std::size_t index) { return oracle.label(index); }

// ---------------------------------------------------------------------------
// Stopping

struct Stabilization {
  std::size_t window = 3;
  double epsilon = 0.01;
};

struct StoppingCriteria {
  std::optional<double> accuracy_threshold;
  std::optional<std::size_t> max_queries;
  std::optional<double> time_budget;  // seconds
  std::optional<Stabilization> stabilization;

  bool any() const noexcept { return accuracy_threshold || max_queries || time_budget || stabilization; }

  void validate() const {
    if (accuracy_threshold && !(*accuracy_threshold > 0.0 && *accuracy_threshold <= 1.0))
      throw Error(Errc::invalid_params, "accuracy_threshold must lie in (0, 1]");
    if (time_budget && !(*time_budget >= 0.0)) throw Error(Errc::invalid_params, "time_budget must be >= 0");
    if (stabilization && stabilization->window < 1)
      throw Error(Errc::invalid_params, "stabilization window must be >= 1");
  }
};

enum class StopReason {
  accuracy_threshold,
  stabilization,
  max_queries,
  time_budget,
  pool_exhausted,
  budget_exhausted,
  stream_exhausted,
};

constexpr std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::accuracy_threshold: return "accuracy_threshold";
    case StopReason::stabilization: return "stabilization";
    case StopReason::max_queries: return "max_queries";
    case StopReason::time_budget: return "time_budget";
    case StopReason::pool_exhausted: return "pool_exhausted";
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::stream_exhausted: return "stream_exhausted";
  }
  return "unknown";
}

struct Iteration {
  std::size_t n_labeled = 0;
  std::vector<std::size_t> queried;  // indices labeled since the previous iteration
  double accuracy = 0.0;
  double selection_seconds = 0.0;  // cumulative
  double training_seconds = 0.0;   // cumulative
  double started_at = 0.0;         // seconds since the run started

  /// Equality over the non-timing fields.
  bool same_outcome(const Iteration& o) const {
    return n_labeled == o.n_labeled && queried == o.queried && accuracy == o.accuracy;
  }
};

struct RunHistory {
  std::vector<Iteration> iterations;
  std::optional<StopReason> stop_reason;

  std::size_t total_queries() const {
    std::size_t n = 0;
    for (const auto& it : iterations) n += it.queried.size();
    return n;
  }
  double final_accuracy() const { return iterations.empty() ? 0.0 : iterations.back().accuracy; }
  double selection_seconds() const { return iterations.empty() ? 0.0 : iterations.back().selection_seconds; }
  double training_seconds() const { return iterations.empty() ? 0.0 : iterations.back().training_seconds; }

  bool same_outcome(const RunHistory& o) const {
    if (stop_reason != o.stop_reason || iterations.size() != o.iterations.size()) return false;
    for (std::size_t i = 0; i < iterations.size(); ++i)
      if (!iterations[i].same_outcome(o.iterations[i])) return false;
    return true;
  }
};

/// First firing criterion in the order accuracy_threshold, stabilization,
/// max_queries, time_budget.
inline std::optional<StopReason> check_stop(const StoppingCriteria& stop, const RunHistory& history,
                                            double elapsed_seconds) {
  const auto& its = history.iterations;
  if (stop.accuracy_threshold && !its.empty() && its.back().accuracy >= *stop.accuracy_threshold)
    return StopReason::accuracy_threshold;
  if (stop.stabilization && its.size() >= stop.stabilization->window) {
    const auto first = its.end() - static_cast<std::ptrdiff_t>(stop.stabilization->window);
    const auto [lo, hi] = std::minmax_element(first, its.end(), [](const Iteration& a, const Iteration& b) {
      return a.accuracy < b.accuracy;
    });
    if (hi->accuracy - lo->accuracy <= stop.stabilization->epsilon) return StopReason::stabilization;
  }
  if (stop.max_queries && history.total_queries() >= *stop.max_queries) return StopReason::max_queries;
  if (stop.time_budget && elapsed_seconds >= *stop.time_budget) return StopReason::time_budget;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Clock

/// Monotonic time in seconds. Injectable so timing behavior is testable.
using Clock = std::function<double()>;

inline Clock steady_clock_seconds() {
  return [] {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  };
}

// ---------------------------------------------------------------------------
// Pool-based loop

/// Called after every recorded iteration.
using PoolObserver = std::function<void(const PoolState&, const RunHistory&)>;

/// Fit on the labeled set, evaluate on test, check stop, query a batch,
/// repeat. Mutates `pool`. LAL regressor training and committee fitting count
/// as selection time.
inline RunHistory run_pool_loop(PoolState& pool, const StrategyConfig& strategy, const ForestParams& learner,
                                const Oracle& oracle, std::size_t batch, const StoppingCriteria& stop,
                                std::uint64_t seed, const Clock& clock = steady_clock_seconds(),
                                const PoolObserver& observer = {}) {
  if (!stop.any()) throw Error(Errc::no_stopping_criterion, "pool loop needs a stopping criterion");
  stop.validate();
  strategy.validate();
  learner.validate();
  if (batch < 1) throw Error(Errc::invalid_params, "batch must be >= 1");
  if (pool.labeled().empty()) throw Error(Errc::invalid_pool, "pool loop needs a labeled seed set");
  if (pool.test().empty()) throw Error(Errc::invalid_pool, "pool loop needs a test set");
  if (&oracle.dataset() != &pool.dataset()) throw Error(Errc::invalid_pool, "oracle and pool use different data");

  const double start = clock();
  for (auto i : pool.labeled())
    if (!pool.annotated(i)) pool.annotate(i, oracle.label(i));
  const auto test = pool.test_dataset();

  RunHistory history;
  double selection = 0.0, training = 0.0;

  std::shared_ptr<const LalRegressor> lal = strategy.lal_regressor;
  if (strategy.kind == StrategyKind::lal && !lal) {
    const double t0 = clock();
    lal = std::make_shared<const LalRegressor>(train_lal_regressor(strategy.lal_params));
    selection += clock() - t0;
  }

  std::vector<std::size_t> last_batch;
  for (std::uint64_t it = 0;; ++it) {
    const double started_at = clock() - start;
    const auto labeled = pool.labeled_dataset();
    double t0 = clock();
    const auto model = fit_forest(labeled, learner, derive_seed(seed, it));
    training += clock() - t0;

    history.iterations.push_back(
        {labeled.size(), std::move(last_batch), evaluate_accuracy(model, test), selection, training, started_at});
    last_batch.clear();
    if (observer) observer(pool, history);

    if (auto reason = check_stop(stop, history, clock() - start)) {
      history.stop_reason = reason;
      break;
    }
    if (pool.unlabeled().empty()) {
      history.stop_reason = StopReason::pool_exhausted;
      break;
    }

    std::size_t k = std::min(batch, pool.unlabeled().size());
    if (stop.max_queries) k = std::min(k, *stop.max_queries - history.total_queries());

    t0 = clock();
    StrategyConfig step = strategy;
    step.seed = derive_seed(strategy.seed, it);
    std::optional<Committee> committee;
    if (is_committee_kind(strategy.kind))
      committee = fit_committee(labeled, strategy.committee_size, learner, derive_seed(derive_seed(seed, it), 0xC0));
    const QueryContext ctx{&model, committee ? &*committee : nullptr, lal.get()};
    last_batch = select_batch(step, ctx, pool, k);
    selection += clock() - t0;

    std::vector<ClassIndex> labels;
    labels.reserve(last_batch.size());
    for (auto i : last_batch) labels.push_back(oracle.label(i));
    pool.label_batch(last_batch, labels);
  }
  return history;
}

// ---------------------------------------------------------------------------
// Stream-based loop

struct StreamConfig {
  /// entropy, least_confidence or margin. Margin is used as 1 - margin so
  /// that larger always means more uncertain.
  StrategyKind measure = StrategyKind::entropy;
  double threshold = 0.5;
  std::size_t max_label_budget = 100;  // oracle queries after the seed set
  double seed_fraction = 0.01;
  std::size_t retrain_every = 10;

  void validate() const {
    if (measure != StrategyKind::entropy && measure != StrategyKind::least_confidence &&
        measure != StrategyKind::margin)
      throw Error(Errc::invalid_params, "stream measure must be entropy, least_confidence or margin");
    if (!(threshold >= 0.0)) throw Error(Errc::invalid_threshold, "threshold must be >= 0");
    if (!(seed_fraction > 0.0 && seed_fraction < 1.0))
      throw Error(Errc::invalid_params, "seed_fraction must lie in (0, 1)");
    if (retrain_every < 1) throw Error(Errc::invalid_params, "retrain_every must be >= 1");
  }
};

inline double stream_uncertainty(StrategyKind measure, const ProbabilityDistribution& p) {
  switch (measure) {
    case StrategyKind::least_confidence: return least_confidence(p);
    case StrategyKind::margin: return 1.0 - margin(p);
    default: return entropy(p);
  }
}

/// Seeds a model on the first seed_fraction of `stream`, then visits each
/// later instance once: it is sent to the oracle when its uncertainty is at
/// least the threshold and budget remains, otherwise discarded for good. The
/// model is refit after every `retrain_every` queries.
inline RunHistory run_stream_loop(const Dataset& stream, const Dataset& test, const StreamConfig& config,
                                  const ForestParams& learner, const Oracle& oracle, const StoppingCriteria& stop,
                                  std::uint64_t seed, const Clock& clock = steady_clock_seconds()) {
  if (stream.empty()) throw Error(Errc::empty_stream, "stream has no records");
  if (test.empty()) throw Error(Errc::empty_test_set, "stream loop needs a test set");
  config.validate();
  stop.validate();
  learner.validate();
  if (&oracle.dataset() != &stream) throw Error(Errc::invalid_params, "oracle must annotate the stream");

  const double start = clock();
  const std::size_t n_seed = std::clamp<std::size_t>(subset_size(config.seed_fraction, stream.size()), 1,
                                                     stream.size());
  std::vector<FlowRecord> labeled;
  for (std::size_t i = 0; i < n_seed; ++i) labeled.push_back({stream[i].features, oracle.label(i)});

  RunHistory history;
  double selection = 0.0, training = 0.0;
  std::uint64_t fits = 0;
  std::vector<std::size_t> pending;
  std::optional<ForestModel> model;

  auto refit = [&]() -> bool {
    const double started_at = clock() - start;
    const double t0 = clock();
    model.emplace(fit_forest(Dataset(stream.schema(), labeled), learner, derive_seed(seed, fits++)));
    training += clock() - t0;
    history.iterations.push_back(
        {labeled.size(), std::move(pending), evaluate_accuracy(*model, test), selection, training, started_at});
    pending.clear();
    if (auto reason = check_stop(stop, history, clock() - start)) {
      history.stop_reason = reason;
      return true;
    }
    return false;
  };

  if (refit()) return history;

  std::size_t queries = 0;
  auto budget_left = [&] {
    if (queries >= config.max_label_budget) return false;
    return !(stop.max_queries && queries >= *stop.max_queries);
  };

  for (std::size_t pos = n_seed; pos < stream.size(); ++pos) {
    if (!budget_left()) break;
    const double t0 = clock();
    const double u = stream_uncertainty(config.measure, model->predict_proba(stream[pos].features));
    selection += clock() - t0;
    if (u < config.threshold) continue;

    labeled.push_back({stream[pos].features, oracle.label(pos)});
    pending.push_back(pos);
    ++queries;
    if (pending.size() == config.retrain_every && refit()) return history;
  }

  if (!pending.empty() && refit()) return history;
  if (stop.max_queries && queries >= *stop.max_queries) history.stop_reason = StopReason::max_queries;
  else if (queries >= config.max_label_budget) history.stop_reason = StopReason::budget_exhausted;
  else history.stop_reason = StopReason::stream_exhausted;
  return history;
}

}  // namespace ntal
