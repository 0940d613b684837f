#pragma once

#include <span>
#include <string>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/error.hpp"

namespace ntal {

/// Training accuracy ratio: subset-trained accuracy over full-data accuracy.
inline double tar(double acc_subset, double acc_full) {
  if (!(acc_full > 0.0)) throw Error(Errc::zero_denominator, "full-data accuracy must be positive");
  return acc_subset / acc_full;
}

struct TimingRecord {
  double subset_train_time = 0.0;      // seconds
  double subset_selection_time = 0.0;  // seconds
  double full_train_time = 0.0;        // seconds
};

/// Training time ratio: (subset training + selection) over full training time.
inline double ttr(const TimingRecord& t) {
  if (!(t.full_train_time > 0.0)) throw Error(Errc::zero_denominator, "full training time must be positive");
  return (t.subset_train_time + t.subset_selection_time) / t.full_train_time;
}

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  std::size_t n_classes() const noexcept { return n_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * n_ + predicted]; }

  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, i);
    return s;
  }
  double accuracy() const {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
  }
  std::size_t row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
    return s;
  }
  std::size_t column_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < n_; ++t) s += at(t, predicted);
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const ClassIndex> predictions, std::span<const ClassIndex> truths,
                                 std::size_t n_classes) {
  if (predictions.size() != truths.size())
    throw Error(Errc::length_mismatch, "predictions and truths differ in length");
  if (predictions.empty()) throw Error(Errc::length_mismatch, "confusion matrix needs at least one pair");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= n_classes || predictions[i] >= n_classes)
      throw Error(Errc::class_out_of_range, "class index at position " + std::to_string(i));
    cm.add(truths[i], predictions[i]);
  }
  return cm;
}

/// Unweighted mean of per-class F1; a class with P + R = 0 scores 0.
inline double f1_macro(const ConfusionMatrix& cm) {
  const std::size_t n = cm.n_classes();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const auto predicted = cm.column_sum(c), actual = cm.row_sum(c);
    const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    const double recall = actual ? tp / static_cast<double>(actual) : 0.0;
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(n);
}

}  // namespace ntal
