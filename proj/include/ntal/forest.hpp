#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/error.hpp"
#include "ntal/rng.hpp"

namespace ntal {

/// Per-class posterior. Entries lie in [0, 1] and sum to 1.
struct ProbabilityDistribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  bool operator==(const ProbabilityDistribution&) const = default;
};

inline void validate(const ProbabilityDistribution& p, double tol = 1e-9) {
  if (p.probs.empty()) throw Error(Errc::invalid_distribution, "empty distribution");
  double sum = 0.0;
  for (double v : p.probs) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::invalid_distribution, "entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(Errc::invalid_distribution, "entries sum to " + std::to_string(sum));
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;           // unlimited when empty
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> features_per_split;  // floor(sqrt(d)) when empty
  bool bootstrap = true;

  void validate() const {
    if (n_trees < 1) throw Error(Errc::invalid_params, "n_trees must be >= 1");
    if (min_samples_split < 2) throw Error(Errc::invalid_params, "min_samples_split must be >= 2");
    if (features_per_split && *features_per_split < 1)
      throw Error(Errc::invalid_params, "features_per_split must be >= 1");
  }

  std::size_t split_features(std::size_t n_features) const {
    const std::size_t k = features_per_split
                              ? *features_per_split
                              : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features))));
    return std::clamp<std::size_t>(k, 1, n_features);
  }
};

// ---------------------------------------------------------------------------
// Training matrix and split criteria

/// Column-major copy of the training rows with a scalar target per row.
struct TrainingMatrix {
  std::vector<std::vector<double>> columns;  // [feature][row]
  std::vector<double> targets;
  std::size_t n_classes = 0;  // 0 for regression

  std::size_t rows() const noexcept { return targets.size(); }
  std::size_t features() const noexcept { return columns.size(); }

  static TrainingMatrix from_rows(std::span<const std::vector<double>> rows, std::span<const double> targets,
                                  std::size_t n_features, std::size_t n_classes) {
    TrainingMatrix m;
    m.columns.assign(n_features, std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < n_features; ++j) m.columns[j][i] = rows[i][j];
    m.targets.assign(targets.begin(), targets.end());
    m.n_classes = n_classes;
    return m;
  }
};

/// Gini impurity over class counts. Scores are n * weighted impurity.
class GiniCriterion {
 public:
  explicit GiniCriterion(std::size_t n_classes) : left_(n_classes), total_(n_classes) {}

  void reset(std::span<const double> targets) {
    std::fill(total_.begin(), total_.end(), 0.0);
    for (double t : targets) total_[static_cast<std::size_t>(t)] += 1.0;
    std::fill(left_.begin(), left_.end(), 0.0);
    n_ = static_cast<double>(targets.size());
    n_left_ = 0.0;
  }
  void move_left(double target) {
    left_[static_cast<std::size_t>(target)] += 1.0;
    n_left_ += 1.0;
  }
  double node_score() const { return n_ - sum_sq(total_) / n_; }
  double split_score() const {
    double sl = 0.0, sr = 0.0;
    for (std::size_t c = 0; c < total_.size(); ++c) {
      sl += left_[c] * left_[c];
      const double r = total_[c] - left_[c];
      sr += r * r;
    }
    const double n_right = n_ - n_left_;
    return n_ - sl / n_left_ - sr / n_right;
  }
  static bool pure(std::span<const double> targets) {
    return std::adjacent_find(targets.begin(), targets.end(), std::not_equal_to<>()) == targets.end();
  }
  /// Majority class, ties to the lowest index.
  double leaf_value(std::span<const double> targets) const {
    std::vector<std::size_t> counts(total_.size(), 0);
    for (double t : targets) ++counts[static_cast<std::size_t>(t)];
    return static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

 private:
  static double sum_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  }
  std::vector<double> left_, total_;
  double n_ = 0.0, n_left_ = 0.0;
};

/// Sum of squared errors around the mean (regression trees).
class VarianceCriterion {
 public:
  explicit VarianceCriterion(std::size_t = 0) {}

  void reset(std::span<const double> targets) {
    sum_ = sum_sq_ = 0.0;
    for (double t : targets) {
      sum_ += t;
      sum_sq_ += t * t;
    }
    n_ = static_cast<double>(targets.size());
    lsum_ = lsum_sq_ = n_left_ = 0.0;
  }
  void move_left(double target) {
    lsum_ += target;
    lsum_sq_ += target * target;
    n_left_ += 1.0;
  }
  double node_score() const { return sum_sq_ - sum_ * sum_ / n_; }
  double split_score() const {
    const double n_right = n_ - n_left_;
    const double rsum = sum_ - lsum_, rsum_sq = sum_sq_ - lsum_sq_;
    return (lsum_sq_ - lsum_ * lsum_ / n_left_) + (rsum_sq - rsum * rsum / n_right);
  }
  static bool pure(std::span<const double> targets) {
    const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
    return *lo == *hi;
  }
  double leaf_value(std::span<const double> targets) const {
    double s = 0.0;
    for (double t : targets) s += t;
    return s / static_cast<double>(targets.size());
  }

 private:
  double sum_ = 0.0, sum_sq_ = 0.0, n_ = 0.0;
  double lsum_ = 0.0, lsum_sq_ = 0.0, n_left_ = 0.0;
};

// ---------------------------------------------------------------------------
// Decision tree

class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;         // leaf class index or regression mean
    std::uint32_t depth = 0;
  };

  DecisionTree() = default;

  /// A single-leaf tree.
  static DecisionTree constant(double value) {
    DecisionTree t;
    t.nodes_.push_back(Node{.value = value});
    return t;
  }

  /// CART growth over `samples` (row indices into `m`, repeats allowed).
  template <class Criterion>
  static DecisionTree grow(const TrainingMatrix& m, std::vector<std::size_t> samples, const ForestParams& params,
                           Rng& rng) {
    DecisionTree tree;
    Grower<Criterion> g{m, params, rng, tree.nodes_, Criterion(m.n_classes), params.split_features(m.features())};
    g.build(samples, 0, samples.size(), 0);
    return tree;
  }

  const Node& leaf_for(std::span<const double> x) const {
    std::uint32_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i];
  }

  double predict(std::span<const double> x) const { return leaf_for(x).value; }
  std::size_t leaf_depth(std::span<const double> x) const { return leaf_for(x).depth; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max<std::size_t>(d, n.depth);
    return d;
  }

  bool operator==(const DecisionTree& o) const {
    if (nodes_.size() != o.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto &a = nodes_[i], &b = o.nodes_[i];
      if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left || a.right != b.right ||
          a.value != b.value)
        return false;
    }
    return true;
  }

 private:
  template <class Criterion>
  struct Grower {
    const TrainingMatrix& m;
    const ForestParams& params;
    Rng& rng;
    std::vector<Node>& nodes;
    Criterion crit;
    std::size_t mtry;
    std::vector<std::pair<double, double>> scratch{};
    std::vector<double> node_targets{};

    struct Split {
      std::int32_t feature = -1;
      double threshold = 0.0;
      double score = std::numeric_limits<double>::infinity();
    };

    std::uint32_t build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, std::uint32_t depth) {
      const auto id = static_cast<std::uint32_t>(nodes.size());
      nodes.push_back(Node{.depth = depth});
      node_targets.clear();
      for (std::size_t i = begin; i < end; ++i) node_targets.push_back(m.targets[idx[i]]);
      const std::size_t n = end - begin;

      const bool depth_reached = params.max_depth && depth >= *params.max_depth;
      if (n < params.min_samples_split || depth_reached || Criterion::pure(node_targets)) {
        make_leaf(id);
        return id;
      }

      const Split best = find_split(idx, begin, end);
      if (best.feature < 0) {
        make_leaf(id);
        return id;
      }

      const auto f = static_cast<std::size_t>(best.feature);
      const auto mid = std::stable_partition(idx.begin() + begin, idx.begin() + end,
                                             [&](std::size_t r) { return m.columns[f][r] <= best.threshold; });
      const auto split_at = static_cast<std::size_t>(mid - idx.begin());

      nodes[id].feature = best.feature;
      nodes[id].threshold = best.threshold;
      const auto l = build(idx, begin, split_at, depth + 1);
      const auto r = build(idx, split_at, end, depth + 1);
      nodes[id].left = l;
      nodes[id].right = r;
      return id;
    }

    void make_leaf(std::uint32_t id) {
      crit.reset(node_targets);
      nodes[id].value = crit.leaf_value(node_targets);
    }

    Split find_split(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
      const std::size_t d = m.features();
      std::vector<std::size_t> order(d);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = 0; i < mtry; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, d - i));
        std::swap(order[i], order[j]);
      }
      // Sampled features first, then the rest as a fallback when every
      // sampled feature is constant on this node. Each group is scanned in
      // index order so equal scores resolve to the lower feature index.
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mtry));
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(mtry), order.end());

      Split best;
      for (std::size_t k = 0; k < d; ++k) {
        if (k == mtry && best.feature >= 0) break;
        scan_feature(order[k], idx, begin, end, best);
      }
      return best;
    }

    void scan_feature(std::size_t f, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                      Split& best) {
      scratch.clear();
      for (std::size_t i = begin; i < end; ++i) scratch.emplace_back(m.columns[f][idx[i]], m.targets[idx[i]]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) return;

      crit.reset(node_targets);
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        crit.move_left(scratch[i].second);
        const double a = scratch[i].first, b = scratch[i + 1].first;
        if (a == b) continue;
        const double score = crit.split_score();
        if (score < best.score) {
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {static_cast<std::int32_t>(f), thr, score};
        }
      }
    }
  };

  std::vector<Node> nodes_;
};

namespace detail {

inline std::vector<std::size_t> draw_samples(std::size_t n, bool bootstrap, Rng& rng) {
  std::vector<std::size_t> s(n);
  if (bootstrap)
    for (auto& v : s) v = static_cast<std::size_t>(uniform_below(rng, n));
  else
    std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

template <class Criterion>
std::vector<DecisionTree> grow_trees(const TrainingMatrix& m, const ForestParams& params, std::uint64_t seed) {
  std::vector<DecisionTree> trees;
  trees.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, t));
    trees.push_back(DecisionTree::grow<Criterion>(m, detail::draw_samples(m.rows(), params.bootstrap, rng),
                                                  params, rng));
  }
  return trees;
}

inline TrainingMatrix matrix_of(const Dataset& data) {
  TrainingMatrix m;
  m.columns.assign(data.n_features(), std::vector<double>(data.size()));
  m.targets.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    for (std::size_t j = 0; j < data.n_features(); ++j) m.columns[j][i] = r.features[j];
    m.targets[i] = static_cast<double>(r.label);
  }
  m.n_classes = data.n_classes();
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classification forest

/// Random forest whose class probabilities are hard-vote fractions.
class ForestModel {
 public:
  ForestModel(FeatureSchema schema, std::vector<DecisionTree> trees, std::uint64_t seed)
      : schema_(std::move(schema)), trees_(std::move(trees)), seed_(seed) {
    if (trees_.empty()) throw Error(Errc::invalid_params, "forest needs at least one tree");
  }

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t n_classes() const noexcept { return schema_.n_classes(); }

  /// Per-class vote counts.
  std::vector<std::size_t> votes(std::span<const double> x) const {
    check_dims(x);
    std::vector<std::size_t> v(n_classes(), 0);
    for (const auto& t : trees_) ++v[static_cast<std::size_t>(t.predict(x))];
    return v;
  }

  ProbabilityDistribution predict_proba(std::span<const double> x) const {
    const auto v = votes(x);
    ProbabilityDistribution p;
    p.probs.resize(v.size());
    const double n = static_cast<double>(trees_.size());
    for (std::size_t c = 0; c < v.size(); ++c) p.probs[c] = static_cast<double>(v[c]) / n;
    return p;
  }

  ClassIndex predict(std::span<const double> x) const { return argmax(predict_proba(x).probs); }

  /// Mean depth of the leaves that `x` reaches.
  double mean_leaf_depth(std::span<const double> x) const {
    check_dims(x);
    double s = 0.0;
    for (const auto& t : trees_) s += static_cast<double>(t.leaf_depth(x));
    return s / static_cast<double>(trees_.size());
  }

 private:
  void check_dims(std::span<const double> x) const {
    if (x.size() != schema_.n_features())
      throw Error(Errc::dimension_mismatch, "expected " + std::to_string(schema_.n_features()) +
                                                " features, got " + std::to_string(x.size()));
  }

  FeatureSchema schema_;
  std::vector<DecisionTree> trees_;
  std::uint64_t seed_ = 0;
};

/// Tree t draws its bootstrap sample and split features from
/// derive_seed(seed, t), so the model does not depend on fitting order.
inline ForestModel fit_forest(const Dataset& labeled, const ForestParams& params, std::uint64_t seed) {
  params.validate();
  if (labeled.empty()) throw Error(Errc::empty_training_set, "cannot fit a forest on zero records");
  const auto m = detail::matrix_of(labeled);
  return ForestModel(labeled.schema(), detail::grow_trees<GiniCriterion>(m, params, seed), seed);
}

inline ProbabilityDistribution predict_proba(const ForestModel& model, std::span<const double> x) {
  return model.predict_proba(x);
}

inline ClassIndex predict(const ForestModel& model, std::span<const double> x) { return model.predict(x); }

inline double evaluate_accuracy(const ForestModel& model, const Dataset& test) {
  if (test.empty()) throw Error(Errc::empty_test_set, "accuracy needs at least one test record");
  if (!(test.schema() == model.schema())) throw Error(Errc::schema_mismatch, "test schema differs from model");
  std::size_t correct = 0;
  for (const auto& r : test.records()) correct += model.predict(r.features) == r.label;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Committee

struct Committee {
  std::vector<ForestModel> members;

  std::size_t size() const noexcept { return members.size(); }

  std::vector<ClassIndex> votes(std::span<const double> x) const {
    std::vector<ClassIndex> v;
    v.reserve(members.size());
    for (const auto& m : members) v.push_back(m.predict(x));
    return v;
  }

  std::vector<ProbabilityDistribution> member_probs(std::span<const double> x) const {
    std::vector<ProbabilityDistribution> p;
    p.reserve(members.size());
    for (const auto& m : members) p.push_back(m.predict_proba(x));
    return p;
  }
};

/// Member m is fit on its own bootstrap resample of `labeled` with seed
/// derive_seed(seed, m).
inline Committee fit_committee(const Dataset& labeled, std::size_t size, const ForestParams& params,
                               std::uint64_t seed) {
  if (size < 2) throw Error(Errc::invalid_committee_size, "committee needs at least two members");
  if (labeled.empty()) throw Error(Errc::empty_training_set, "cannot fit a committee on zero records");
  Committee c;
  c.members.reserve(size);
  for (std::size_t m = 0; m < size; ++m) {
    const std::uint64_t member_seed = derive_seed(seed, m);
    Rng rng(derive_seed(member_seed, 0xB007));
    const auto sample = detail::draw_samples(labeled.size(), true, rng);
    c.members.push_back(fit_forest(labeled.select(sample), params, member_seed));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Regression forest

class RegressionForest {
 public:
  RegressionForest() = default;
  RegressionForest(std::size_t n_features, std::vector<DecisionTree> trees)
      : n_features_(n_features), trees_(std::move(trees)) {}

  bool trained() const noexcept { return !trees_.empty(); }
  std::size_t n_features() const noexcept { return n_features_; }

  double predict(std::span<const double> x) const {
    if (!trained()) throw Error(Errc::untrained_regressor, "regression forest has no trees");
    if (x.size() != n_features_)
      throw Error(Errc::dimension_mismatch, "expected " + std::to_string(n_features_) + " features, got " +
                                                std::to_string(x.size()));
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(x);
    return s / static_cast<double>(trees_.size());
  }

 private:
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

inline RegressionForest fit_regression_forest(std::span<const std::vector<double>> rows,
                                              std::span<const double> targets, const ForestParams& params,
                                              std::uint64_t seed) {
  params.validate();
  if (rows.empty()) throw Error(Errc::empty_training_set, "cannot fit a regressor on zero rows");
  if (rows.size() != targets.size()) throw Error(Errc::length_mismatch, "rows and targets differ in length");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != d) throw Error(Errc::dimension_mismatch, "ragged regression rows");
  const auto m = TrainingMatrix::from_rows(rows, targets, d, 0);
  return RegressionForest(d, detail::grow_trees<VarianceCriterion>(m, params, seed));
}

}  // namespace ntal
