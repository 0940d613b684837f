#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/error.hpp"

namespace ntal {

/// Partition of dataset indices into labeled (with annotator labels),
/// unlabeled and test sets. Index lists are kept sorted.
class PoolState {
 public:
  PoolState(const Dataset& dataset, std::vector<std::size_t> labeled, std::vector<std::size_t> unlabeled,
            std::vector<std::size_t> test)
      : dataset_(&dataset),
        labeled_(std::move(labeled)),
        unlabeled_(std::move(unlabeled)),
        test_(std::move(test)) {
    std::sort(labeled_.begin(), labeled_.end());
    std::sort(unlabeled_.begin(), unlabeled_.end());
    std::sort(test_.begin(), test_.end());
    std::vector<char> seen(dataset.size(), 0);
    for (const auto* set : {&labeled_, &unlabeled_, &test_})
      for (auto i : *set) {
        if (i >= dataset.size())
          throw Error(Errc::invalid_pool, "index " + std::to_string(i) + " outside dataset");
        if (seen[i]++) throw Error(Errc::invalid_pool, "index " + std::to_string(i) + " in two sets");
      }
  }

  const Dataset& dataset() const noexcept { return *dataset_; }
  const std::vector<std::size_t>& labeled() const noexcept { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const noexcept { return unlabeled_; }
  const std::vector<std::size_t>& test() const noexcept { return test_; }
  std::size_t universe_size() const noexcept { return labeled_.size() + unlabeled_.size() + test_.size(); }

  bool annotated(std::size_t i) const { return annotations_.contains(i); }

  /// Annotator label for a labeled index.
  ClassIndex label_of(std::size_t i) const {
    auto it = annotations_.find(i);
    if (it == annotations_.end())
      throw Error(Errc::invalid_pool, "index " + std::to_string(i) + " has no annotation");
    return it->second;
  }

  void annotate(std::size_t i, ClassIndex label) {
    if (!std::binary_search(labeled_.begin(), labeled_.end(), i))
      throw Error(Errc::invalid_pool, "annotating index " + std::to_string(i) + " outside the labeled set");
    annotations_[i] = label;
  }

  /// Moves `batch` from U to the labeled set with the given labels.
  void label_batch(std::span<const std::size_t> batch, std::span<const ClassIndex> labels) {
    if (batch.size() != labels.size()) throw Error(Errc::length_mismatch, "batch and labels differ in size");
    for (std::size_t k = 0; k < batch.size(); ++k) {
      auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), batch[k]);
      if (it == unlabeled_.end() || *it != batch[k])
        throw Error(Errc::invalid_pool, "index " + std::to_string(batch[k]) + " is not unlabeled");
      unlabeled_.erase(it);
      labeled_.insert(std::upper_bound(labeled_.begin(), labeled_.end(), batch[k]), batch[k]);
      annotations_[batch[k]] = labels[k];
    }
  }

  /// Training set of labeled records carrying annotator labels.
  Dataset labeled_dataset() const {
    std::vector<FlowRecord> out;
    out.reserve(labeled_.size());
    for (auto i : labeled_) out.push_back({(*dataset_)[i].features, label_of(i)});
    return Dataset(dataset_->schema(), std::move(out));
  }

  Dataset test_dataset() const { return dataset_->select(test_); }

  /// Annotator-label histogram of the labeled set.
  std::vector<std::size_t> labeled_class_counts() const {
    std::vector<std::size_t> counts(dataset_->n_classes(), 0);
    for (auto i : labeled_)
      if (auto it = annotations_.find(i); it != annotations_.end()) ++counts[it->second];
    return counts;
  }

 private:
  const Dataset* dataset_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::vector<std::size_t> test_;
  std::unordered_map<std::size_t, ClassIndex> annotations_;
};

}  // namespace ntal
